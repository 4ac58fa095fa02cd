import { defineConfig } from 'vite';

export default defineConfig({
  server: {
    // during development the Python service runs separately; in production
    // `topoforge serve` hosts the built bundle from the same origin
    proxy: {
      '/api': 'http://127.0.0.1:8080',
    },
  },
  build: {
    outDir: 'dist',
  },
});
