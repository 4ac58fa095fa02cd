import { describe, expect, it } from 'vitest';

import { encodeGrayPng, encodeRgbaPng, fromBase64, toBase64 } from '../src/png';
import { decodePng } from './pngDecode';

describe('png encoder', () => {
  it('round-trips RGBA pixels through an independent decoder', () => {
    const w = 5;
    const h = 3;
    const rgba = new Uint8Array(w * h * 4);
    for (let i = 0; i < rgba.length; i++) rgba[i] = (i * 37) % 256;
    const decoded = decodePng(encodeRgbaPng(w, h, rgba));
    expect(decoded.width).toBe(w);
    expect(decoded.height).toBe(h);
    expect(decoded.channels).toBe(4);
    expect(Array.from(decoded.pixels)).toEqual(Array.from(rgba));
  });

  it('round-trips grayscale pixels', () => {
    const gray = Uint8Array.from({ length: 16 }, (_, i) => i * 16);
    const decoded = decodePng(encodeGrayPng(4, 4, gray));
    expect(decoded.channels).toBe(1);
    expect(Array.from(decoded.pixels)).toEqual(Array.from(gray));
  });

  it('handles images larger than one deflate stored block', () => {
    const w = 256;
    const h = 80; // raw stream > 65535 bytes forces multiple blocks
    const rgba = new Uint8Array(w * h * 4).fill(200);
    const decoded = decodePng(encodeRgbaPng(w, h, rgba));
    expect(decoded.pixels.every((v) => v === 200)).toBe(true);
  });

  it('rejects mismatched buffer sizes', () => {
    expect(() => encodeRgbaPng(4, 4, new Uint8Array(3))).toThrow(/expected/);
  });

  it('base64 helpers round-trip bytes', () => {
    const bytes = Uint8Array.from({ length: 99 }, (_, i) => (i * 7) % 256);
    expect(Array.from(fromBase64(toBase64(bytes)))).toEqual(Array.from(bytes));
  });
});
