/** End-to-end UI check against a scripted service: no sockets, everything in jsdom. */

import { expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatStore } from "../src/state.js";
import { mountApp } from "../src/view.js";
import { errorBody, sampleAskResponse, scriptedFetch, Scripted, waitFor } from "./stubs.js";

async function criterion(name: string, body: () => Promise<void>): Promise<void> {
  try {
    await body();
  } catch (err) {
    console.log(`[FAIL] ${name}`);
    throw err;
  }
  console.log(`[PASS] ${name}`);
}

function mount(steps: Scripted[]) {
  const stub = scriptedFetch(steps);
  const store = new ChatStore(new ApiClient("", stub.fetch));
  const root = document.createElement("div");
  document.body.appendChild(root);
  mountApp(root, store, { status: "ok", index_count: 4, model: "stub-echo" });
  const input = root.querySelector("#question-input") as HTMLInputElement;
  const form = root.querySelector("#ask-form") as HTMLFormElement;
  const submit = (text: string) => {
    input.value = text;
    input.dispatchEvent(new Event("input", { bubbles: true }));
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
  };
  return { root, store, stub, input, submit };
}

it("answers a question with clickable references, source cards and retry on failure", async () => {
  await criterion("stubbed service chat round trip", async () => {
    const payload = sampleAskResponse();
    const { root, submit } = mount([
      { status: 200, body: payload },
      { status: 502, body: errorBody("backend_failed", "generation backend failed") },
      { status: 200, body: payload },
    ]);

    // ask a question and wait for the rendered answer
    submit("How do I reduce wandering?");
    await waitFor(() => root.querySelectorAll(".message.assistant.done").length === 1);

    const answer = root.querySelector(".message.assistant.done")!;
    expect(answer.querySelector(".bubble")!.textContent).toContain(
      "Keep doors locked and consider an identification bracelet",
    );

    // every reference renders as a clickable link whose href is the payload url byte for byte
    const links = [...answer.querySelectorAll("a.reference-link")];
    expect(links.map((a) => a.getAttribute("href"))).toEqual(payload.references.map((r) => r.url));
    for (const link of links) {
      expect(link.tagName).toBe("A");
      expect(link.getAttribute("target")).toBe("_blank");
    }

    // inline [n] markers link into the reference list
    const citations = [...answer.querySelectorAll("a.citation")];
    expect(citations.length).toBeGreaterThan(0);
    for (const marker of citations) {
      const target = marker.getAttribute("href")!.slice(1);
      expect(answer.querySelector(`li[id="${target}"]`)).not.toBeNull();
    }

    // the source panel shows one card per retrieved hit
    (answer.querySelector(".toggle-sources") as HTMLButtonElement).click();
    await waitFor(() => root.querySelectorAll(".hit-card").length > 0);
    expect(root.querySelectorAll(".hit-card")).toHaveLength(payload.hits.length);

    // a 502 becomes an error bubble with a retry button that resends the question
    submit("And at night?");
    await waitFor(() => root.querySelectorAll(".message.assistant.error").length === 1);
    const retry = root.querySelector(".retry-button") as HTMLButtonElement;
    expect(retry).not.toBeNull();

    retry.click();
    await waitFor(() => root.querySelectorAll(".message.assistant.done").length === 2);
    expect(root.querySelectorAll(".message.assistant.error")).toHaveLength(0);
  });
});

it("disables sending while a request is pending and for blank input", async () => {
  let release: (value: { status: number; body: unknown }) => void = () => {};
  const gate = new Promise<{ status: number; body: unknown }>((resolve) => {
    release = resolve;
  });
  const { root, input, submit, stub } = mount([{ defer: gate }]);
  const send = root.querySelector("#send-button") as HTMLButtonElement;

  // blank input cannot be sent
  expect(send.disabled).toBe(true);
  submit("   ");
  expect(stub.calls).toHaveLength(0);

  submit("a real question");
  expect(input.disabled).toBe(true);
  expect(send.disabled).toBe(true);

  release({ status: 200, body: sampleAskResponse() });
  await waitFor(() => !input.disabled);
  expect(root.querySelectorAll(".message.assistant.done")).toHaveLength(1);
});

it("keeps a failed question in the input for editing", async () => {
  const { root, input, submit } = mount([
    { status: 502, body: errorBody("backend_failed", "down") },
  ]);
  submit("will this come back?");
  await waitFor(() => root.querySelectorAll(".message.assistant.error").length === 1);
  expect(input.value).toBe("will this come back?");
});
