/** Typed client for the generation service; fetch is injectable for tests. */
import type { JobRequest, JobStatus, PaletteCode } from './types';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
  }
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const payload = await response.json();
    if (typeof payload.detail === 'string') return payload.detail;
    if (Array.isArray(payload.detail)) {
      return payload.detail
        .map((e: { loc?: unknown[]; msg?: string }) => `${(e.loc ?? []).join('.')}: ${e.msg ?? ''}`)
        .join('; ');
    }
  } catch {
    /* non-JSON body */
  }
  return `HTTP ${response.status}`;
}

export async function fetchPalette(baseUrl: string, fetchFn: FetchLike = fetch): Promise<PaletteCode[]> {
  const response = await fetchFn(`${baseUrl}/api/palette`);
  if (!response.ok) throw new ApiError(await errorMessage(response), response.status);
  const payload = (await response.json()) as { codes: PaletteCode[] };
  return payload.codes;
}

export async function submitJob(
  baseUrl: string,
  request: JobRequest,
  fetchFn: FetchLike = fetch,
): Promise<string> {
  const response = await fetchFn(`${baseUrl}/api/jobs`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(request),
  });
  if (!response.ok) throw new ApiError(await errorMessage(response), response.status);
  const payload = (await response.json()) as { job_id: string };
  return payload.job_id;
}

export async function getJob(
  baseUrl: string,
  jobId: string,
  fetchFn: FetchLike = fetch,
): Promise<JobStatus> {
  const response = await fetchFn(`${baseUrl}/api/jobs/${jobId}`);
  if (!response.ok) throw new ApiError(await errorMessage(response), response.status);
  return (await response.json()) as JobStatus;
}

export interface PollOptions {
  intervalMs?: number; // base polling cadence
  backoffAfterMs?: number; // start stretching the interval past this point
  backoffFactor?: number;
  maxIntervalMs?: number;
  signal?: AbortSignal; // cancel when a new submission supersedes this one
  fetchFn?: FetchLike;
  onTick?: (status: JobStatus) => void;
}

const sleep = (ms: number, signal?: AbortSignal) =>
  new Promise<void>((resolve, reject) => {
    const timer = setTimeout(() => {
      signal?.removeEventListener('abort', onAbort);
      resolve();
    }, ms);
    const onAbort = () => {
      clearTimeout(timer);
      reject(new ApiError('polling cancelled'));
    };
    signal?.addEventListener('abort', onAbort, { once: true });
  });

/**
 * Poll a job until it is done (resolved) or failed (rejected). Polls every
 * 500 ms; after 30 s the interval backs off geometrically to a 5 s cap.
 */
export async function pollJob(
  baseUrl: string,
  jobId: string,
  options: PollOptions = {},
): Promise<JobStatus> {
  const {
    intervalMs = 500,
    backoffAfterMs = 30_000,
    backoffFactor = 1.6,
    maxIntervalMs = 5_000,
    signal,
    fetchFn = fetch,
    onTick,
  } = options;

  let waited = 0;
  let interval = intervalMs;
  for (;;) {
    if (signal?.aborted) throw new ApiError('polling cancelled');
    const status = await getJob(baseUrl, jobId, fetchFn);
    onTick?.(status);
    if (status.state === 'done') return status;
    if (status.state === 'failed') throw new ApiError(status.error ?? 'job failed');
    await sleep(interval, signal);
    waited += interval;
    if (waited >= backoffAfterMs) {
      interval = Math.min(interval * backoffFactor, maxIntervalMs);
    }
  }
}
