import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { errorBody, sampleAskResponse, scriptedFetch } from "./stubs.js";

describe("ApiClient.ask", () => {
  it("posts the question and returns the parsed payload", async () => {
    const payload = sampleAskResponse();
    const stub = scriptedFetch([{ status: 200, body: payload }]);
    const client = new ApiClient("", stub.fetch);

    const response = await client.ask("How do I reduce wandering?");

    expect(response).toEqual(payload);
    expect(stub.calls).toHaveLength(1);
    expect(stub.calls[0].url).toBe("/api/ask");
    expect(stub.calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(stub.calls[0].init?.body))).toEqual({
      question: "How do I reduce wandering?",
    });
  });

  it("includes k only when given", async () => {
    const stub = scriptedFetch([{ status: 200, body: sampleAskResponse() }]);
    await new ApiClient("", stub.fetch).ask("q", 5);
    expect(JSON.parse(String(stub.calls[0].init?.body))).toEqual({ question: "q", k: 5 });
  });

  it("prefixes a configured base url", async () => {
    const stub = scriptedFetch([{ status: 200, body: sampleAskResponse() }]);
    await new ApiClient("http://127.0.0.1:8000", stub.fetch).ask("q");
    expect(stub.calls[0].url).toBe("http://127.0.0.1:8000/api/ask");
  });

  it("raises the service error code and message on a 502", async () => {
    const stub = scriptedFetch([
      { status: 502, body: errorBody("backend_failed", "generation backend failed") },
    ]);
    const err = await new ApiClient("", stub.fetch).ask("q").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(502);
    expect((err as ApiError).code).toBe("backend_failed");
    expect((err as ApiError).message).toBe("generation backend failed");
  });

  it("falls back to the status line when the error body is not ours", async () => {
    const stub = scriptedFetch([{ status: 500, body: "gateway exploded" }]);
    const err = await new ApiClient("", stub.fetch).ask("q").catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("http_500");
    expect((err as ApiError).message).toBe("HTTP 500");
  });

  it("maps network failure to code network with status 0", async () => {
    const stub = scriptedFetch([{ reject: new TypeError("fetch failed") }]);
    const err = await new ApiClient("", stub.fetch).ask("q").catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(0);
    expect((err as ApiError).code).toBe("network");
  });

  it("rejects a payload missing required fields", async () => {
    const broken = { ...sampleAskResponse(), references: "nope" };
    const stub = scriptedFetch([{ status: 200, body: broken }]);
    const err = await new ApiClient("", stub.fetch).ask("q").catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("malformed_response");
  });
});

describe("ApiClient.health", () => {
  it("returns the health triple", async () => {
    const stub = scriptedFetch([
      { status: 200, body: { status: "ok", index_count: 4, model: "stub-echo" } },
    ]);
    const health = await new ApiClient("", stub.fetch).health();
    expect(health).toEqual({ status: "ok", index_count: 4, model: "stub-echo" });
    expect(stub.calls[0].url).toBe("/api/health");
    expect(stub.calls[0].init?.method).toBe("GET");
  });
});
