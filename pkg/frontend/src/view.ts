/** DOM rendering. No framework: the chat log is rebuilt from the store on every change. */

import { HealthResponse } from "./api.js";
import { ChatMessage, ChatStore } from "./state.js";

const MARKER = /\breferences\s*:/gi;

/**
 * Text to show in the answer bubble. When the service parsed a reference
 * list out of the answer, the raw trailing block is cut; the structured
 * list rendered below the bubble replaces it.
 */
export function answerBody(text: string, hasReferences: boolean): string {
  if (!hasReferences) {
    return text;
  }
  let cut = -1;
  MARKER.lastIndex = 0;
  for (let m = MARKER.exec(text); m !== null; m = MARKER.exec(text)) {
    cut = m.index;
  }
  if (cut < 0) {
    return text;
  }
  return text.slice(0, cut).replace(/\s+$/, "");
}

function referenceAnchorId(messageId: number, index: number): string {
  return `ref-${messageId}-${index}`;
}

/**
 * Answer text with inline [n] markers turned into anchors that jump to the
 * reference list entry. Markers without a matching reference stay plain text.
 */
export function linkifyAnswer(body: string, message: ChatMessage): DocumentFragment {
  const known = new Set(message.references.map((r) => r.index));
  const fragment = document.createDocumentFragment();
  const pattern = /\[(\d+)\]/g;
  let last = 0;
  for (let m = pattern.exec(body); m !== null; m = pattern.exec(body)) {
    const index = Number(m[1]);
    if (!known.has(index)) {
      continue;
    }
    if (m.index > last) {
      fragment.appendChild(document.createTextNode(body.slice(last, m.index)));
    }
    const anchor = document.createElement("a");
    anchor.className = "citation";
    anchor.setAttribute("href", `#${referenceAnchorId(message.id, index)}`);
    anchor.textContent = m[0];
    fragment.appendChild(anchor);
    last = m.index + m[0].length;
  }
  if (last < body.length) {
    fragment.appendChild(document.createTextNode(body.slice(last)));
  }
  return fragment;
}

export function auditBadgeText(message: ChatMessage): string {
  const audit = message.audit;
  if (!audit) {
    return "";
  }
  if (!audit.has_references) {
    return "no references";
  }
  const grounded = Math.round(audit.grounded_fraction * audit.n_references);
  return `grounded ${grounded}/${audit.n_references}`;
}

export interface MessageHandlers {
  onRetry: (messageId: number) => void;
  onToggleSources: (messageId: number) => void;
}

function renderReferences(message: ChatMessage): HTMLElement {
  const section = document.createElement("div");
  section.className = "references";
  const heading = document.createElement("div");
  heading.className = "references-heading";
  heading.textContent = "References";
  section.appendChild(heading);
  const list = document.createElement("ol");
  for (const ref of message.references) {
    const item = document.createElement("li");
    item.id = referenceAnchorId(message.id, ref.index);
    item.value = ref.index;
    const anchor = document.createElement("a");
    anchor.className = "reference-link";
    // the href must be the payload url byte for byte, so bypass URL normalization
    anchor.setAttribute("href", ref.url);
    anchor.setAttribute("target", "_blank");
    anchor.setAttribute("rel", "noopener noreferrer");
    anchor.textContent = ref.url;
    item.appendChild(anchor);
    list.appendChild(item);
  }
  section.appendChild(list);
  return section;
}

function renderSources(message: ChatMessage, handlers: MessageHandlers): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "sources";
  const toggle = document.createElement("button");
  toggle.type = "button";
  toggle.className = "toggle-sources";
  toggle.textContent = `Sources (${message.hits.length})`;
  toggle.setAttribute("aria-expanded", message.sourcesOpen ? "true" : "false");
  toggle.addEventListener("click", () => handlers.onToggleSources(message.id));
  wrap.appendChild(toggle);
  if (message.sourcesOpen) {
    const panel = document.createElement("div");
    panel.className = "source-panel";
    for (const hit of message.hits) {
      const card = document.createElement("article");
      card.className = "hit-card";
      const link = document.createElement("a");
      link.className = "hit-url";
      link.setAttribute("href", hit.source_url);
      link.setAttribute("target", "_blank");
      link.setAttribute("rel", "noopener noreferrer");
      link.textContent = hit.source_url;
      const score = document.createElement("span");
      score.className = "hit-score";
      score.textContent = hit.score.toFixed(3);
      const snippet = document.createElement("p");
      snippet.className = "hit-snippet";
      snippet.textContent = hit.snippet;
      card.append(link, score, snippet);
      panel.appendChild(card);
    }
    wrap.appendChild(panel);
  }
  return wrap;
}

export function renderMessage(message: ChatMessage, handlers: MessageHandlers): HTMLElement {
  const row = document.createElement("div");
  row.className = `message ${message.role} ${message.status}`;
  row.dataset.messageId = String(message.id);

  const bubble = document.createElement("div");
  bubble.className = "bubble";
  row.appendChild(bubble);

  if (message.role === "user") {
    bubble.textContent = message.text;
    return row;
  }
  if (message.status === "pending") {
    bubble.classList.add("pending");
    bubble.textContent = "Thinking...";
    return row;
  }
  if (message.status === "error") {
    bubble.classList.add("error");
    const text = document.createElement("span");
    text.className = "error-text";
    text.textContent = `The service could not answer: ${message.errorMessage}`;
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "retry-button";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => handlers.onRetry(message.id));
    bubble.append(text, retry);
    return row;
  }

  bubble.appendChild(linkifyAnswer(answerBody(message.text, message.references.length > 0), message));

  const meta = document.createElement("div");
  meta.className = "meta";
  const badge = document.createElement("span");
  badge.className = "audit-badge";
  badge.textContent = auditBadgeText(message);
  meta.appendChild(badge);
  if (message.latencyMs !== null) {
    const latency = document.createElement("span");
    latency.className = "latency";
    latency.textContent = `${message.latencyMs} ms`;
    meta.appendChild(latency);
  }
  row.appendChild(meta);

  if (message.references.length > 0) {
    row.appendChild(renderReferences(message));
  }
  if (message.hits.length > 0) {
    row.appendChild(renderSources(message, handlers));
  }
  return row;
}

function healthLine(health: HealthResponse | null): string {
  if (!health) {
    return "service unavailable";
  }
  const model = health.model || "unknown model";
  return `${health.status} · ${health.index_count} indexed chunks · ${model}`;
}

/** Build the page under root and keep it in sync with the store. */
export function mountApp(root: HTMLElement, store: ChatStore, health: HealthResponse | null = null): void {
  root.innerHTML = "";

  const header = document.createElement("header");
  header.className = "app-header";
  const title = document.createElement("h1");
  title.textContent = "Caregiving Knowledge Chat";
  const status = document.createElement("div");
  status.className = "health-line";
  status.textContent = healthLine(health);
  header.append(title, status);

  const log = document.createElement("div");
  log.id = "chat-log";

  const form = document.createElement("form");
  form.id = "ask-form";
  const input = document.createElement("input");
  input.id = "question-input";
  input.type = "text";
  input.autocomplete = "off";
  input.placeholder = "Ask a caregiving question";
  const send = document.createElement("button");
  send.id = "send-button";
  send.type = "submit";
  send.textContent = "Send";
  form.append(input, send);

  root.append(header, log, form);

  const handlers: MessageHandlers = {
    onRetry: (id) => void store.retry(id),
    onToggleSources: (id) => store.toggleSources(id),
  };

  const syncControls = () => {
    input.disabled = store.pending;
    send.disabled = store.pending || input.value.trim() === "";
  };

  const renderLog = () => {
    log.innerHTML = "";
    for (const message of store.messages) {
      log.appendChild(renderMessage(message, handlers));
    }
    log.scrollTop = log.scrollHeight;
    syncControls();
  };

  store.subscribe(renderLog);
  input.addEventListener("input", syncControls);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const question = input.value;
    if (question.trim() === "" || store.pending) {
      return;
    }
    input.value = "";
    void store.sendQuestion(question).then((message) => {
      // a failed question stays in the input so it can be edited and resent
      if (message && message.status === "error" && input.value.trim() === "") {
        input.value = message.question;
        syncControls();
      }
    });
  });

  renderLog();
}
