/**
 * Browser shell: video player with a transparent capture overlay, the
 * precision and speed test screens, and upload controls.
 *
 * The pointer stands in for gaze here — a fidelity compromise that the UI
 * states up front. The toolbar sits outside the overlay, so its controls
 * never register gaze points.
 */

import { CaptureSession, ClickMode, PrecisionTest, SpeedTest } from "./capture.js";
import { DwellEmulator, TurboEmulator } from "./emulation.js";
import { GazeSession } from "./gaze.js";
import {
  ServerInfo,
  UploadError,
  sessionFileBlob,
  uploadSession,
  waitForJob,
} from "./upload.js";

const HOLD_TO_EXIT_S = 2.0;
const DWELL_DOT_MS = 300;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class CaptureApp {
  private readonly root: HTMLElement;
  private readonly video: HTMLVideoElement;
  private readonly overlay: HTMLDivElement;
  private readonly status: HTMLDivElement;
  private readonly serverInput: HTMLInputElement;
  private readonly modeSelect: HTMLSelectElement;

  private session: CaptureSession | null = null;
  private dwell = new DwellEmulator();
  private turbo = new TurboEmulator();
  private turboTimer: number | null = null;
  private holdStart: number | null = null;
  private videoFile: File | null = null;

  constructor(root: HTMLElement) {
    this.root = root;

    const toolbar = el("div", "toolbar");
    this.serverInput = el("input");
    this.serverInput.placeholder = "server host:port";
    this.serverInput.value = localStorage.getItem("itrace-server") ?? "http://localhost:8080";
    this.modeSelect = el("select");
    for (const mode of ["manual", "dwell_emulated", "turbo_emulated"]) {
      const opt = el("option", undefined, mode);
      opt.value = mode;
      this.modeSelect.append(opt);
    }
    const fileInput = el("input");
    fileInput.type = "file";
    fileInput.accept = "video/*";
    fileInput.addEventListener("change", () => this.loadVideo(fileInput.files?.[0] ?? null));
    const startBtn = el("button", undefined, "Start capture");
    startBtn.addEventListener("click", () => this.startCapture());
    const uploadBtn = el("button", undefined, "Upload");
    uploadBtn.addEventListener("click", () => void this.upload(false));
    const bgBtn = el("button", undefined, "Upload in background");
    bgBtn.addEventListener("click", () => void this.upload(true));
    const precisionBtn = el("button", undefined, "Precision test");
    precisionBtn.addEventListener("click", () => this.runPrecisionTest());
    const speedBtn = el("button", undefined, "Speed test");
    speedBtn.addEventListener("click", () => this.runSpeedTest());
    const exitBtn = el("button", undefined, "Hold to exit");
    exitBtn.addEventListener("pointerdown", () => (this.holdStart = performance.now()));
    const cancelHold = () => (this.holdStart = null);
    exitBtn.addEventListener("pointerup", () => {
      if (this.holdStart !== null && performance.now() - this.holdStart >= HOLD_TO_EXIT_S * 1000) {
        this.stopCapture();
      }
      cancelHold();
    });
    exitBtn.addEventListener("pointerleave", cancelHold);
    toolbar.append(fileInput, this.modeSelect, this.serverInput, startBtn,
      precisionBtn, speedBtn, uploadBtn, bgBtn, exitBtn);

    const note = el("div", "note",
      "Pointer position stands in for gaze in this browser client.");

    const stage = el("div", "stage");
    this.video = el("video");
    this.video.controls = false;
    this.overlay = el("div", "overlay");
    this.overlay.addEventListener("pointerdown", (e) => this.onOverlayClick(e));
    this.overlay.addEventListener("pointermove", (e) => this.onOverlayMove(e));
    stage.append(this.video, this.overlay);

    this.status = el("div", "status", "Load a video to begin.");
    this.root.append(toolbar, note, stage, this.status);

    window.addEventListener("keydown", (e) => {
      if (e.code === "Space" && this.session?.clickMode === "turbo_emulated") {
        e.preventDefault();
        this.turbo.press(this.video.currentTime);
        if (this.turboTimer === null) {
          this.turboTimer = window.setInterval(() => this.drainTurbo(), 20);
        }
      }
    });
    window.addEventListener("keyup", (e) => {
      if (e.code === "Space") this.turbo.release();
    });
  }

  private loadVideo(file: File | null): void {
    if (!file) return;
    this.videoFile = file;
    this.video.src = URL.createObjectURL(file);
    this.setStatus(`Loaded ${file.name}.`);
  }

  private startCapture(): void {
    if (!this.videoFile) {
      this.setStatus("Load a video first.");
      return;
    }
    const userId = `web-${Date.now().toString(36)}`;
    this.session = new CaptureSession(userId, this.videoFile.name);
    this.session.clickMode = this.modeSelect.value as ClickMode;
    this.dwell = new DwellEmulator();
    this.turbo = new TurboEmulator();
    this.video.addEventListener("loadedmetadata", () => {
      if (this.session) this.session.videoDurationS = this.video.duration;
    }, { once: true });
    if (!Number.isNaN(this.video.duration)) {
      this.session.videoDurationS = this.video.duration;
    }
    void this.video.play();
    this.setStatus(`Capturing as ${userId} (${this.session.clickMode}).`);
  }

  private stopCapture(): void {
    this.video.pause();
    if (this.turboTimer !== null) {
      clearInterval(this.turboTimer);
      this.turboTimer = null;
    }
    this.setStatus(`Capture stopped: ${this.session?.points.length ?? 0} points.`);
  }

  private overlayRect() {
    const r = this.overlay.getBoundingClientRect();
    return { left: r.left, top: r.top, width: r.width, height: r.height };
  }

  private onOverlayClick(e: PointerEvent): void {
    if (!this.session || this.session.clickMode !== "manual") return;
    const point = this.session.captureClick(
      e.clientX, e.clientY, this.overlayRect(), this.video.currentTime);
    if (point) this.flashDot(e.clientX, e.clientY);
  }

  private onOverlayMove(e: PointerEvent): void {
    if (!this.session) return;
    const rect = this.overlayRect();
    const nx = (e.clientX - rect.left) / rect.width;
    const ny = (e.clientY - rect.top) / rect.height;
    if (this.session.clickMode === "dwell_emulated") {
      const click = this.dwell.sample(nx, ny, this.video.currentTime);
      if (click) {
        this.session.captureNormalized(click.x, click.y, click.t);
        this.flashDot(rect.left + click.x * rect.width, rect.top + click.y * rect.height);
      }
    } else if (this.session.clickMode === "turbo_emulated") {
      this.turbo.movePointer(nx, ny);
    }
  }

  private drainTurbo(): void {
    if (!this.session) return;
    for (const click of this.turbo.tick(this.video.currentTime)) {
      this.session.captureNormalized(click.x, click.y, click.t);
    }
  }

  /** Brief dot indicator mirroring the device's visual click feedback. */
  private flashDot(pageX: number, pageY: number): void {
    const dot = el("div", "click-dot");
    dot.style.left = `${pageX}px`;
    dot.style.top = `${pageY}px`;
    document.body.append(dot);
    setTimeout(() => dot.remove(), DWELL_DOT_MS);
  }

  private runPrecisionTest(): void {
    const test = new PrecisionTest();
    const panel = el("div", "test-panel");
    const target = el("div", "target");
    const readout = el("div", "readout", "Click the circle. 5 attempts.");
    const place = () => {
      target.style.left = `${20 + Math.random() * 60}%`;
      target.style.top = `${20 + Math.random() * 60}%`;
    };
    place();
    target.addEventListener("pointerdown", (e) => {
      const r = target.getBoundingClientRect();
      const radius = r.width / 2;
      const score = test.recordAttempt({
        clickX: e.clientX,
        clickY: e.clientY,
        centerX: r.left + radius,
        centerY: r.top + radius,
        targetRadius: radius,
      });
      this.flashDot(e.clientX, e.clientY);
      if (test.isComplete) {
        const avg = test.result().averageScore;
        if (this.session) this.session.precisionScoreValue = avg;
        readout.textContent = `Precision: ${avg.toFixed(1)}%`;
        setTimeout(() => panel.remove(), 1500);
      } else {
        readout.textContent = `Attempt score: ${score?.toFixed(1)}%`;
        place();
      }
    });
    panel.append(readout, target);
    this.root.append(panel);
  }

  private runSpeedTest(): void {
    const test = new SpeedTest();
    const panel = el("div", "test-panel");
    const target = el("div", "target fill");
    const readout = el("div", "readout", "Tap the circle 20 times, fast.");
    target.addEventListener("pointerdown", () => {
      test.recordClick(performance.now() / 1000);
      target.style.setProperty("--fill", `${test.progress * 100}%`);
      if (test.isComplete) {
        readout.textContent = `${test.clicksPerSecond().toFixed(2)} clicks/s`;
        setTimeout(() => panel.remove(), 1500);
      }
    });
    panel.append(readout, target);
    this.root.append(panel);
  }

  private async upload(background: boolean): Promise<void> {
    if (!this.session || !this.videoFile) {
      this.setStatus("Nothing to upload yet.");
      return;
    }
    const server: ServerInfo = { baseUrl: this.serverInput.value.replace(/\/$/, "") };
    localStorage.setItem("itrace-server", server.baseUrl);
    const session = this.session.toSession();
    this.setStatus("Uploading…");
    try {
      const result = await uploadSession(
        server, this.videoFile, this.videoFile.name, session, background);
      if (result.video) {
        this.showHeatmap(result.video);
      } else if (result.jobId) {
        if (background) {
          this.setStatus(`Render queued: job ${result.jobId}`);
        } else {
          this.setStatus(`Still rendering (job ${result.jobId})…`);
          const video = await waitForJob(server, result.jobId, (p) =>
            this.setStatus(`Rendering… ${(p * 100).toFixed(0)}%`));
          this.showHeatmap(video);
        }
      }
    } catch (err) {
      if (err instanceof UploadError) {
        this.offerDownload(session);
        this.setStatus(`Upload failed (${err.message}); session saved locally.`);
      } else {
        throw err;
      }
    }
  }

  private showHeatmap(video: Blob): void {
    this.video.src = URL.createObjectURL(video);
    void this.video.play();
    this.setStatus("Heatmap ready.");
  }

  /** Network-failure fallback: the unsent session as a downloadable file. */
  private offerDownload(session: GazeSession): void {
    const a = el("a", undefined, `Download ${session.userId}.json`);
    a.setAttribute("href", URL.createObjectURL(sessionFileBlob(session)));
    a.setAttribute("download", `${session.userId}.json`);
    this.status.append(" ", a);
  }

  private setStatus(text: string): void {
    this.status.textContent = text;
  }
}

export function mount(selector = "#app"): CaptureApp {
  const root = document.querySelector<HTMLElement>(selector);
  if (!root) throw new Error(`mount point ${selector} not found`);
  return new CaptureApp(root);
}
