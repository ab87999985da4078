/**
 * Dwell and turbo click emulation, driven by the live pointer position.
 *
 * The pointer stands in for gaze (an explicit fidelity compromise surfaced
 * in the UI). Both emulators are pure state machines fed (x, y, t) samples
 * so they can be unit-tested with scripted pointer streams; the UI layer
 * wires them to pointermove / keydown events and the playback clock.
 */

export interface EmittedClick {
  x: number;
  y: number;
  t: number;
}

export interface DwellOptions {
  /** Seconds the pointer must stay within tolerance of the anchor. */
  dwellTimeS?: number;
  /** Anchor radius, in the same units as the sample coordinates. */
  tolerance?: number;
  /** Extra dead time after a fire before the next click may fire. */
  refractoryS?: number;
}

/**
 * Anchor-radius dwell timer: a click fires at the anchor once the pointer
 * has stayed within the movement tolerance for the full dwell time. The
 * anchor resets whenever the tolerance is exceeded, so continuous wide
 * motion produces zero clicks. The timer restarts after each fire.
 */
export class DwellEmulator {
  readonly dwellTimeS: number;
  readonly tolerance: number;
  readonly refractoryS: number;

  private anchorX: number | null = null;
  private anchorY = 0;
  private anchorT = 0;
  private lastFire = -Infinity;

  constructor(opts: DwellOptions = {}) {
    this.dwellTimeS = opts.dwellTimeS ?? 1.4;
    this.tolerance = opts.tolerance ?? 0.05;
    this.refractoryS = opts.refractoryS ?? 0.0;
  }

  /** Feed one pointer sample; returns a click if the timer fired. */
  sample(x: number, y: number, t: number): EmittedClick | null {
    if (
      this.anchorX === null ||
      Math.hypot(x - this.anchorX, y - this.anchorY) > this.tolerance
    ) {
      this.anchorX = x;
      this.anchorY = y;
      this.anchorT = t;
      return null;
    }
    const minSpacing = this.dwellTimeS + this.refractoryS;
    if (t - this.anchorT >= this.dwellTimeS && t - this.lastFire >= minSpacing) {
      const click = { x: this.anchorX, y: this.anchorY, t };
      this.anchorX = x;
      this.anchorY = y;
      this.anchorT = t;
      this.lastFire = t;
      return click;
    }
    return null;
  }

  reset(): void {
    this.anchorX = null;
    this.lastFire = -Infinity;
  }
}

export interface TurboOptions {
  /** Click rate while the button is held. */
  rateHz?: number;
}

/**
 * Turbo-button emulation: while held, emits clicks at a fixed rate at the
 * current pointer position (positions track the live pointer). The first
 * click fires immediately on press, so a hold of duration D yields
 * floor(D * rate) + 1 clicks.
 */
export class TurboEmulator {
  readonly rateHz: number;

  private held = false;
  private nextClickT = 0;
  private pointerX = 0.5;
  private pointerY = 0.5;

  constructor(opts: TurboOptions = {}) {
    this.rateHz = opts.rateHz ?? 16.7;
  }

  /** Track the live pointer; positions of emitted clicks follow it. */
  movePointer(x: number, y: number): void {
    this.pointerX = x;
    this.pointerY = y;
  }

  press(t: number): void {
    if (this.held) return;
    this.held = true;
    this.nextClickT = t;
  }

  release(): void {
    this.held = false;
  }

  get isHeld(): boolean {
    return this.held;
  }

  /** Advance the clock to t; returns every click due since the last call. */
  tick(t: number): EmittedClick[] {
    if (!this.held) return [];
    const clicks: EmittedClick[] = [];
    const period = 1.0 / this.rateHz;
    while (this.nextClickT <= t) {
      clicks.push({ x: this.pointerX, y: this.pointerY, t: this.nextClickT });
      this.nextClickT += period;
    }
    return clicks;
  }
}
