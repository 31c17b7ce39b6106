import { ApiClient, ApiError } from "./api.js";
import type { DecisionForm, DecisionRecord } from "./types.js";

export type SubmitOutcome =
  | { status: "accepted"; record: DecisionRecord }
  | { status: "rejected"; message: string }
  | { status: "queued" };

/**
 * Decision submission with an offline queue.
 *
 * Network failures queue the form for retry (latest form per trajectory id
 * wins); server rejections (4xx) are surfaced immediately and are not
 * retried, so the reviewer can fix the input without losing it.
 */
export class DecisionQueue {
  private pending = new Map<string, DecisionForm>();

  constructor(private readonly api: ApiClient) {}

  get pendingCount(): number {
    return this.pending.size;
  }

  pendingForms(): DecisionForm[] {
    return [...this.pending.values()];
  }

  async submit(form: DecisionForm): Promise<SubmitOutcome> {
    try {
      const record = await this.api.postDecision(form);
      this.pending.delete(form.trajectory_id);
      return { status: "accepted", record };
    } catch (err) {
      if (err instanceof ApiError) {
        return { status: "rejected", message: err.message };
      }
      this.pending.set(form.trajectory_id, form);
      return { status: "queued" };
    }
  }

  /** Retry every queued form; returns the accepted records. */
  async flush(): Promise<DecisionRecord[]> {
    const accepted: DecisionRecord[] = [];
    for (const form of [...this.pending.values()]) {
      const outcome = await this.submit(form);
      if (outcome.status === "accepted") {
        accepted.push(outcome.record);
      }
    }
    return accepted;
  }
}
