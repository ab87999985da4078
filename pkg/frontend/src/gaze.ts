/**
 * Core gaze data types and the canonical session file format.
 *
 * Mirrors the server-side data model: normalized [0,1] coordinates,
 * playback-clock timestamps, and JSON serialization with sorted keys and
 * 6-decimal float rounding so client- and server-written files agree.
 */

export interface GazePoint {
  /** Fraction of frame width, in [0, 1]. */
  x: number;
  /** Fraction of frame height, in [0, 1]. */
  y: number;
  /** Seconds since session start (video playback clock). */
  t: number;
}

export type ClickMethod = "pinch" | "dwell" | "controller" | "simulated";
export type SessionMode = "video" | "spatial";

export interface GazeSession {
  schemaVersion: number;
  userId: string;
  precisionScore: number | null;
  clickMethod: ClickMethod;
  mode: SessionMode;
  videoName: string;
  videoDurationS: number | null;
  points: GazePoint[];
}

export const SCHEMA_VERSION = 1;

/**
 * Map viewport pixel coordinates to [0, 1] fractions, clamping edges.
 * Same formula as the server's normalize_click.
 */
export function normalizeClick(
  pixelX: number,
  pixelY: number,
  viewportW: number,
  viewportH: number,
): [number, number] {
  if (viewportW <= 0 || viewportH <= 0) {
    throw new Error("viewport dimensions must be positive");
  }
  const x = Math.min(1.0, Math.max(0.0, pixelX / viewportW));
  const y = Math.min(1.0, Math.max(0.0, pixelY / viewportH));
  return [x, y];
}

/** Round to 6 decimal digits (the canonical file precision). */
export function round6(v: number): number {
  return Number(v.toFixed(6));
}

function fmtFloat(v: number | null): string {
  if (v === null) return "null";
  const r = round6(v);
  // Python's json module prints float whole numbers as "N.0"; match that
  // so files round-trip identically in the common case.
  if (Number.isInteger(r) && Math.abs(r) < 1e16) return `${r}.0`;
  return String(r);
}

/**
 * Serialize a session to the canonical JSON form: sorted keys, compact
 * separators, floats rounded to 6 decimals.
 */
export function serializeSession(session: GazeSession): string {
  const pts = session.points
    .map((p) => `{"t":${fmtFloat(p.t)},"x":${fmtFloat(p.x)},"y":${fmtFloat(p.y)}}`)
    .join(",");
  return (
    "{" +
    `"click_method":${JSON.stringify(session.clickMethod)},` +
    `"mode":${JSON.stringify(session.mode)},` +
    `"points":[${pts}],` +
    `"schema_version":${session.schemaVersion},` +
    `"user":{"id":${JSON.stringify(session.userId)},` +
    `"precision_score":${fmtFloat(session.precisionScore)}},` +
    `"video":{"duration_s":${fmtFloat(session.videoDurationS)},` +
    `"name":${JSON.stringify(session.videoName)}}` +
    "}"
  );
}

/** Parse a session file produced by this client or by the server. */
export function parseSession(text: string): GazeSession {
  const doc = JSON.parse(text);
  if (doc.schema_version !== SCHEMA_VERSION) {
    throw new Error(`unsupported schema_version: ${doc.schema_version}`);
  }
  const points: GazePoint[] = (doc.points ?? []).map(
    (p: { x: number; y: number; t: number }) => ({ x: p.x, y: p.y, t: p.t }),
  );
  return {
    schemaVersion: doc.schema_version,
    userId: doc.user.id,
    precisionScore: doc.user.precision_score ?? null,
    clickMethod: doc.click_method,
    mode: doc.mode,
    videoName: doc.video.name,
    videoDurationS: doc.video.duration_s ?? null,
    points,
  };
}
