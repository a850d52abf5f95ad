/** Fetch stand-ins for tests: scripted responses, recorded calls, no sockets. */

import { AskResponse, FetchLike } from "../src/api.js";

export interface RecordedCall {
  url: string;
  init?: RequestInit;
}

export type Scripted =
  | { status: number; body: unknown }
  | { reject: Error }
  | { defer: Promise<{ status: number; body: unknown }> };

export interface StubFetch {
  fetch: FetchLike;
  calls: RecordedCall[];
}

/** Each call consumes the next scripted step; running past the script fails loudly. */
export function scriptedFetch(steps: Scripted[]): StubFetch {
  const calls: RecordedCall[] = [];
  const queue = [...steps];
  const fetch: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const step = queue.shift();
    if (!step) {
      throw new Error(`unexpected request to ${url}`);
    }
    if ("reject" in step) {
      throw step.reject;
    }
    const resolved = "defer" in step ? await step.defer : step;
    return new Response(JSON.stringify(resolved.body), {
      status: resolved.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetch, calls };
}

export function sampleAskResponse(overrides: Partial<AskResponse> = {}): AskResponse {
  return {
    answer:
      "Keep doors locked and consider an identification bracelet [1]. " +
      "A daily routine also reduces wandering [2].\n\n" +
      "References:\n" +
      "[1] https://kb.example/wandering-safety\n" +
      "[2] https://kb.example/daily-routines?lang=en&utm_source=x",
    references: [
      { index: 1, url: "https://kb.example/wandering-safety" },
      { index: 2, url: "https://kb.example/daily-routines?lang=en&utm_source=x" },
    ],
    hits: [
      {
        chunk_id: "doc1:0",
        source_url: "https://kb.example/wandering-safety",
        score: 0.91234,
        snippet: "Locking exterior doors and labeling clothing lowers wandering risk.",
      },
      {
        chunk_id: "doc2:0",
        source_url: "https://kb.example/daily-routines?lang=en&utm_source=x",
        score: 0.8,
        snippet: "Predictable daily routines reduce agitation in the evening.",
      },
      {
        chunk_id: "doc3:1",
        source_url: "https://kb.example/care-planning",
        score: 0.77777,
        snippet: "A written care plan helps families divide responsibilities.",
      },
    ],
    audit: {
      has_references: true,
      n_references: 2,
      inline_resolved: true,
      grounded_fraction: 1.0,
      urls_wellformed: true,
      urls_live: null,
    },
    latency_ms: 12,
    ...overrides,
  };
}

export function errorBody(code: string, message: string): unknown {
  return { error: { code, message } };
}

export async function waitFor(check: () => boolean, ms = 2000): Promise<void> {
  const start = Date.now();
  while (!check()) {
    if (Date.now() - start > ms) {
      throw new Error("timed out waiting for condition");
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}
