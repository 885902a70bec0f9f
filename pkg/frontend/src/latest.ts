/**
 * Last-write-wins gate for async responses.
 *
 * Each request draws a monotonically increasing ticket; a response may only
 * be applied when its ticket is still the newest one issued AND it was
 * produced against the fingerprint the UI currently trusts. Anything else
 * is stale and must be dropped.
 */

export class LatestGate {
  private counter = 0;
  private applied = 0;

  issue(): number {
    return ++this.counter;
  }

  newestIssued(): number {
    return this.counter;
  }

  /** True when `ticket` is the newest issued and newer than anything shown. */
  isCurrent(ticket: number): boolean {
    return ticket === this.counter && ticket > this.applied;
  }

  /** Try to claim display rights for `ticket`; false means: drop it. */
  tryApply(ticket: number, fingerprint?: string, currentFingerprint?: string): boolean {
    if (fingerprint !== undefined && fingerprint !== currentFingerprint) {
      return false;
    }
    if (!this.isCurrent(ticket)) {
      return false;
    }
    this.applied = ticket;
    return true;
  }
}
