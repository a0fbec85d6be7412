// Session-side turn discipline: the UI allows exactly one in-flight request
// and freezes once the game is over.

export type Phase = "awaiting-human" | "awaiting-agent" | "closed";

export class TurnState {
  private phase_: Phase = "awaiting-human";

  get phase(): Phase {
    return this.phase_;
  }

  get canAct(): boolean {
    return this.phase_ === "awaiting-human";
  }

  /** Claim the turn for an outgoing request; false when one is pending. */
  begin(): boolean {
    if (this.phase_ !== "awaiting-human") {
      return false;
    }
    this.phase_ = "awaiting-agent";
    return true;
  }

  /** The agent replied; the human may act again. */
  resolve(): void {
    if (this.phase_ === "awaiting-agent") {
      this.phase_ = "awaiting-human";
    }
  }

  close(): void {
    this.phase_ = "closed";
  }
}
