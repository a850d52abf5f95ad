import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatStore } from "../src/state.js";
import { errorBody, sampleAskResponse, scriptedFetch, Scripted } from "./stubs.js";

function storeWith(steps: Scripted[]) {
  const stub = scriptedFetch(steps);
  return { store: new ChatStore(new ApiClient("", stub.fetch)), stub };
}

describe("ChatStore.sendQuestion", () => {
  it("appends a user row and a filled assistant row", async () => {
    const payload = sampleAskResponse();
    const { store } = storeWith([{ status: 200, body: payload }]);

    const message = await store.sendQuestion("  How do I reduce wandering?  ");

    expect(store.messages).toHaveLength(2);
    const [user, assistant] = store.messages;
    expect(user.role).toBe("user");
    expect(user.text).toBe("How do I reduce wandering?");
    expect(user.references).toEqual([]);
    expect(user.hits).toEqual([]);
    expect(assistant).toBe(message);
    expect(assistant.status).toBe("done");
    expect(assistant.text).toBe(payload.answer);
    expect(assistant.references).toEqual(payload.references);
    expect(assistant.hits).toEqual(payload.hits);
    expect(assistant.audit).toEqual(payload.audit);
    expect(assistant.latencyMs).toBe(payload.latency_ms);
  });

  it("refuses blank input", async () => {
    const { store, stub } = storeWith([]);
    expect(await store.sendQuestion("   \n\t ")).toBeNull();
    expect(store.messages).toHaveLength(0);
    expect(stub.calls).toHaveLength(0);
  });

  it("allows one request in flight at a time", async () => {
    let release: (value: { status: number; body: unknown }) => void = () => {};
    const gate = new Promise<{ status: number; body: unknown }>((resolve) => {
      release = resolve;
    });
    const { store, stub } = storeWith([{ defer: gate }]);

    const first = store.sendQuestion("first");
    expect(store.pending).toBe(true);
    expect(await store.sendQuestion("second")).toBeNull();
    expect(store.messages).toHaveLength(2);

    release({ status: 200, body: sampleAskResponse() });
    await first;
    expect(store.pending).toBe(false);
    expect(stub.calls).toHaveLength(1);
  });

  it("notifies subscribers on the pending and settled states", async () => {
    const { store } = storeWith([{ status: 200, body: sampleAskResponse() }]);
    const seen: string[] = [];
    store.subscribe(() => {
      seen.push(store.messages.map((m) => m.status).join(","));
    });
    await store.sendQuestion("q");
    expect(seen).toEqual(["done,pending", "done,done"]);
  });

  it("marks the assistant row failed and keeps the question for retry", async () => {
    const { store } = storeWith([
      { status: 502, body: errorBody("backend_failed", "backend down") },
    ]);
    const message = await store.sendQuestion("does this fail?");
    expect(message?.status).toBe("error");
    expect(message?.errorMessage).toBe("backend down");
    expect(message?.question).toBe("does this fail?");
    expect(store.pending).toBe(false);
  });
});

describe("ChatStore.retry", () => {
  it("resends the stored question and fills the same row", async () => {
    const payload = sampleAskResponse();
    const { store, stub } = storeWith([
      { status: 502, body: errorBody("backend_failed", "backend down") },
      { status: 200, body: payload },
    ]);
    const failed = await store.sendQuestion("try again?");
    expect(failed?.status).toBe("error");

    await store.retry(failed!.id);

    expect(store.messages).toHaveLength(2);
    expect(failed?.status).toBe("done");
    expect(failed?.text).toBe(payload.answer);
    expect(stub.calls).toHaveLength(2);
    expect(JSON.parse(String(stub.calls[1].init?.body))).toEqual({ question: "try again?" });
  });

  it("ignores rows that did not fail", async () => {
    const { store, stub } = storeWith([{ status: 200, body: sampleAskResponse() }]);
    const message = await store.sendQuestion("fine");
    await store.retry(message!.id);
    expect(stub.calls).toHaveLength(1);
  });
});

describe("ChatStore.toggleSources", () => {
  it("toggles per message and only when hits exist", async () => {
    const withHits = sampleAskResponse();
    const noHits = sampleAskResponse({ hits: [] });
    const { store } = storeWith([
      { status: 200, body: withHits },
      { status: 200, body: noHits },
    ]);
    const first = await store.sendQuestion("one");
    const second = await store.sendQuestion("two");

    store.toggleSources(first!.id);
    expect(first?.sourcesOpen).toBe(true);
    expect(second?.sourcesOpen).toBe(false);

    store.toggleSources(first!.id);
    expect(first?.sourcesOpen).toBe(false);

    store.toggleSources(second!.id);
    expect(second?.sourcesOpen).toBe(false);
  });
});
