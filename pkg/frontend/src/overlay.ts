/**
 * Timed feedback presentation: while feedback is on screen the explanation
 * overlay alternates with the plain image at a fixed cadence, and the
 * proceed control stays locked until the minimum wait has elapsed.
 */

export interface OverlayOptions {
  alternateMs: number;
  minWaitMs: number;
  hasExplanation: boolean;
  onToggle?: (showExplanation: boolean) => void;
  onUnlock?: () => void;
}

export class OverlayController {
  showingExplanation = false;
  unlocked = false;
  private intervalId: ReturnType<typeof setInterval> | null = null;
  private timeoutId: ReturnType<typeof setTimeout> | null = null;
  private toggleListeners: Array<(showExplanation: boolean) => void> = [];
  private unlockListeners: Array<() => void> = [];

  constructor(private readonly opts: OverlayOptions) {
    if (opts.onToggle) {
      this.toggleListeners.push(opts.onToggle);
    }
    if (opts.onUnlock) {
      this.unlockListeners.push(opts.onUnlock);
    }
  }

  addToggleListener(fn: (showExplanation: boolean) => void): void {
    this.toggleListeners.push(fn);
  }

  addUnlockListener(fn: () => void): void {
    if (this.unlocked) {
      fn();
      return;
    }
    this.unlockListeners.push(fn);
  }

  start(): void {
    if (this.opts.hasExplanation) {
      this.intervalId = setInterval(() => {
        this.showingExplanation = !this.showingExplanation;
        for (const fn of this.toggleListeners) {
          fn(this.showingExplanation);
        }
      }, this.opts.alternateMs);
    }
    this.timeoutId = setTimeout(() => {
      this.unlocked = true;
      for (const fn of this.unlockListeners.splice(0)) {
        fn();
      }
    }, this.opts.minWaitMs);
  }

  /** Resolves once the minimum wait has elapsed (immediately if it already has). */
  waitUnlocked(): Promise<void> {
    if (this.unlocked) {
      return Promise.resolve();
    }
    return new Promise((resolve) => {
      this.unlockListeners.push(resolve);
    });
  }

  stop(): void {
    if (this.intervalId !== null) {
      clearInterval(this.intervalId);
      this.intervalId = null;
    }
    if (this.timeoutId !== null) {
      clearTimeout(this.timeoutId);
      this.timeoutId = null;
    }
    this.showingExplanation = false;
  }
}
