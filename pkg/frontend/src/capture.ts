/**
 * Capture-session state: collects click-anchored gaze points against the
 * video playback clock, and holds the precision / speed test state.
 */

import {
  ClickMethod,
  GazePoint,
  GazeSession,
  SCHEMA_VERSION,
  normalizeClick,
} from "./gaze.js";
import {
  PrecisionAttempt,
  PrecisionResult,
  precisionScore,
  speedTestCps,
} from "./metrics.js";

export type ClickMode = "manual" | "dwell_emulated" | "turbo_emulated";

export const PRECISION_ATTEMPTS = 5;
export const SPEED_TEST_CLICKS = 20;

export interface ViewportRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export class CaptureSession {
  readonly userId: string;
  readonly videoName: string;
  clickMode: ClickMode = "manual";
  videoDurationS: number | null = null;
  precisionScoreValue: number | null = null;
  readonly points: GazePoint[] = [];

  constructor(userId: string, videoName: string) {
    this.userId = userId;
    this.videoName = videoName;
  }

  /**
   * Record a click at viewport pixel coordinates, timestamped with the
   * current playback time. Clicks outside the video rect are ignored
   * silently (the toolbar sits outside the overlay).
   */
  captureClick(
    pixelX: number,
    pixelY: number,
    rect: ViewportRect,
    playbackTimeS: number,
  ): GazePoint | null {
    const localX = pixelX - rect.left;
    const localY = pixelY - rect.top;
    if (localX < 0 || localY < 0 || localX > rect.width || localY > rect.height) {
      return null;
    }
    const [x, y] = normalizeClick(localX, localY, rect.width, rect.height);
    const point = { x, y, t: playbackTimeS };
    this.points.push(point);
    return point;
  }

  /** Record an already-normalized click (dwell / turbo emulators). */
  captureNormalized(x: number, y: number, playbackTimeS: number): GazePoint {
    const point = { x, y, t: playbackTimeS };
    this.points.push(point);
    return point;
  }

  toSession(): GazeSession {
    // Points are appended in playback order, but seeking backward during
    // capture is allowed, so sort for the file-format invariant.
    const sorted = [...this.points].sort((a, b) => a.t - b.t);
    const method: ClickMethod =
      this.clickMode === "turbo_emulated" ? "controller" : this.clickMode === "dwell_emulated" ? "dwell" : "pinch";
    return {
      schemaVersion: SCHEMA_VERSION,
      userId: this.userId,
      precisionScore: this.precisionScoreValue,
      clickMethod: method,
      mode: "video",
      videoName: this.videoName,
      videoDurationS: this.videoDurationS,
      points: sorted,
    };
  }
}

/** Precision test: exactly 5 attempts, then the averaged score is final. */
export class PrecisionTest {
  readonly attempts: PrecisionAttempt[] = [];

  get isComplete(): boolean {
    return this.attempts.length >= PRECISION_ATTEMPTS;
  }

  /** Returns the per-attempt score, or null once the test is complete. */
  recordAttempt(attempt: PrecisionAttempt): number | null {
    if (this.isComplete) return null;
    this.attempts.push(attempt);
    return precisionScore([attempt]).averageScore;
  }

  /** Abandoning mid-test discards attempts. */
  abandon(): void {
    this.attempts.length = 0;
  }

  result(): PrecisionResult {
    if (!this.isComplete) {
      throw new Error("precision test requires exactly 5 attempts");
    }
    return precisionScore(this.attempts);
  }
}

/** Speed test: exactly 20 clicks; reports (N-1)/elapsed clicks per second. */
export class SpeedTest {
  readonly timestamps: number[] = [];

  get isComplete(): boolean {
    return this.timestamps.length >= SPEED_TEST_CLICKS;
  }

  /** Progress fraction for the fill indicator. */
  get progress(): number {
    return this.timestamps.length / SPEED_TEST_CLICKS;
  }

  recordClick(t: number): void {
    if (this.isComplete) return;
    this.timestamps.push(t);
  }

  clicksPerSecond(): number {
    if (!this.isComplete) {
      throw new Error("speed test requires exactly 20 clicks");
    }
    return speedTestCps(this.timestamps);
  }
}
