import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { DecisionQueue } from "../src/queue.js";
import { createMockServer, makeDetail } from "./mockServer.js";

const form = { trajectory_id: "t1", human_verdict: "remove" as const, reviewer: "r", note: "bad tool use" };

describe("DecisionQueue", () => {
  it("accepts online submissions immediately", async () => {
    const server = createMockServer([makeDetail()]);
    const queue = new DecisionQueue(new ApiClient(server.fetch));
    const outcome = await queue.submit(form);
    expect(outcome.status).toBe("accepted");
    expect(queue.pendingCount).toBe(0);
    expect(server.decisions).toHaveLength(1);
  });

  it("queues on network failure and flushes once back online", async () => {
    const server = createMockServer([makeDetail()]);
    const queue = new DecisionQueue(new ApiClient(server.fetch));
    server.offline = true;
    expect((await queue.submit(form)).status).toBe("queued");
    expect(queue.pendingCount).toBe(1);
    expect(server.decisions).toHaveLength(0);

    server.offline = false;
    const accepted = await queue.flush();
    expect(accepted).toHaveLength(1);
    expect(queue.pendingCount).toBe(0);
    expect(server.decisions[0].note).toBe("bad tool use");
  });

  it("keeps only the latest form per trajectory while offline", async () => {
    const server = createMockServer([makeDetail()]);
    const queue = new DecisionQueue(new ApiClient(server.fetch));
    server.offline = true;
    await queue.submit(form);
    await queue.submit({ ...form, human_verdict: "keep" });
    expect(queue.pendingCount).toBe(1);

    server.offline = false;
    await queue.flush();
    expect(server.decisions).toHaveLength(1);
    expect(server.decisions[0].human_verdict).toBe("keep");
  });

  it("does not queue server rejections", async () => {
    const server = createMockServer([makeDetail()]);
    const queue = new DecisionQueue(new ApiClient(server.fetch));
    const outcome = await queue.submit({ ...form, trajectory_id: "unknown" });
    expect(outcome.status).toBe("rejected");
    expect(queue.pendingCount).toBe(0);
  });
});
