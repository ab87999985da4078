/**
 * HTTP client for the heatmap service. Talks only the public API:
 * /health, /api/v1/heatmap/video, /api/v1/jobs/{id}[/result].
 */

import { GazeSession, serializeSession } from "./gaze.js";

export interface ServerInfo {
  baseUrl: string;
}

export interface JobStatus {
  job_id: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  error_message?: string | null;
}

export interface UploadResult {
  /** Completed render returned inline (blocking mode). */
  video: Blob | null;
  /** Job id for polling (background mode or blocking timeout). */
  jobId: string | null;
}

export class UploadError extends Error {
  readonly status: number | null;

  constructor(message: string, status: number | null = null) {
    super(message);
    this.status = status;
  }
}

export async function checkHealth(server: ServerInfo): Promise<boolean> {
  try {
    const resp = await fetch(`${server.baseUrl}/health`);
    if (!resp.ok) return false;
    const doc = await resp.json();
    return doc.status === "ok" && doc.api === 1;
  } catch {
    return false;
  }
}

/** The session file, as the user would download it. */
export function sessionFileBlob(session: GazeSession): Blob {
  return new Blob([serializeSession(session)], { type: "application/json" });
}

/**
 * Upload a video plus its gaze session. With background=false the server
 * blocks until the render completes and returns the heatmap video; with
 * background=true (or on a blocking timeout) it returns a job id instead.
 */
export async function uploadSession(
  server: ServerInfo,
  videoFile: Blob,
  videoFileName: string,
  session: GazeSession,
  background = false,
): Promise<UploadResult> {
  const form = new FormData();
  form.append("video", videoFile, videoFileName);
  form.append("gaze", sessionFileBlob(session), `${session.userId}.json`);
  form.append("background", background ? "true" : "false");

  let resp: Response;
  try {
    resp = await fetch(`${server.baseUrl}/api/v1/heatmap/video`, {
      method: "POST",
      body: form,
    });
  } catch (err) {
    throw new UploadError(`network failure: ${err}`);
  }
  if (resp.status === 202) {
    const doc = await resp.json();
    return { video: null, jobId: doc.job_id };
  }
  if (!resp.ok) {
    const detail = await resp.text();
    throw new UploadError(`upload rejected (${resp.status}): ${detail}`, resp.status);
  }
  const contentType = resp.headers.get("content-type") ?? "";
  if (contentType.includes("json")) {
    const doc = await resp.json();
    return { video: null, jobId: doc.job_id ?? null };
  }
  return { video: await resp.blob(), jobId: null };
}

export async function jobStatus(
  server: ServerInfo,
  jobId: string,
): Promise<JobStatus> {
  const resp = await fetch(`${server.baseUrl}/api/v1/jobs/${jobId}`);
  if (!resp.ok) {
    throw new UploadError(`job lookup failed (${resp.status})`, resp.status);
  }
  return (await resp.json()) as JobStatus;
}

export async function jobResult(
  server: ServerInfo,
  jobId: string,
): Promise<Blob> {
  const resp = await fetch(`${server.baseUrl}/api/v1/jobs/${jobId}/result`);
  if (!resp.ok) {
    throw new UploadError(`job result unavailable (${resp.status})`, resp.status);
  }
  return await resp.blob();
}

/** Poll a background job to completion, reporting progress along the way. */
export async function waitForJob(
  server: ServerInfo,
  jobId: string,
  onProgress?: (progress: number) => void,
  pollIntervalMs = 1000,
): Promise<Blob> {
  for (;;) {
    const status = await jobStatus(server, jobId);
    onProgress?.(status.progress);
    if (status.state === "done") return jobResult(server, jobId);
    if (status.state === "failed") {
      throw new UploadError(`render failed: ${status.error_message ?? "unknown"}`);
    }
    await new Promise((resolve) => setTimeout(resolve, pollIntervalMs));
  }
}
