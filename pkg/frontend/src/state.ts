/** Client-side conversation state. One in-flight request at a time, nothing persisted. */

import { AnswerAudit, ApiClient, ApiError, Reference, RetrievedHit } from "./api.js";

export type Role = "user" | "assistant";
export type MessageStatus = "pending" | "done" | "error";

export interface ChatMessage {
  id: number;
  role: Role;
  text: string;
  /** The question this row answers; used by retry. Empty on user rows. */
  question: string;
  references: Reference[];
  hits: RetrievedHit[];
  audit: AnswerAudit | null;
  status: MessageStatus;
  errorMessage: string;
  latencyMs: number | null;
  sourcesOpen: boolean;
}

type Listener = () => void;

export class ChatStore {
  readonly messages: ChatMessage[] = [];
  private nextId = 1;
  private inFlight = false;
  private readonly listeners: Listener[] = [];

  constructor(private readonly client: ApiClient) {}

  get pending(): boolean {
    return this.inFlight;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  private blankMessage(role: Role): ChatMessage {
    return {
      id: this.nextId++,
      role,
      text: "",
      question: "",
      references: [],
      hits: [],
      audit: null,
      status: "done",
      errorMessage: "",
      latencyMs: null,
      sourcesOpen: false,
    };
  }

  /**
   * Append the user's question and a pending assistant row, then resolve the
   * row from the service. Returns the assistant row, or null when the send
   * was refused (blank input or a request already in flight).
   */
  async sendQuestion(text: string): Promise<ChatMessage | null> {
    const question = text.trim();
    if (!question || this.inFlight) {
      return null;
    }
    const user = this.blankMessage("user");
    user.text = question;
    const assistant = this.blankMessage("assistant");
    assistant.question = question;
    assistant.status = "pending";
    this.messages.push(user, assistant);
    await this.resolve(assistant);
    return assistant;
  }

  /** Re-send the question behind a failed assistant row, filling it in place. */
  async retry(messageId: number): Promise<void> {
    const message = this.messages.find((m) => m.id === messageId);
    if (!message || message.role !== "assistant" || message.status !== "error" || this.inFlight) {
      return;
    }
    message.status = "pending";
    message.errorMessage = "";
    await this.resolve(message);
  }

  toggleSources(messageId: number): void {
    const message = this.messages.find((m) => m.id === messageId);
    if (!message || message.hits.length === 0) {
      return;
    }
    message.sourcesOpen = !message.sourcesOpen;
    this.emit();
  }

  private async resolve(message: ChatMessage): Promise<void> {
    this.inFlight = true;
    this.emit();
    try {
      const response = await this.client.ask(message.question);
      message.text = response.answer;
      message.references = response.references;
      message.hits = response.hits;
      message.audit = response.audit;
      message.latencyMs = response.latency_ms;
      message.status = "done";
    } catch (err) {
      message.status = "error";
      message.errorMessage = err instanceof ApiError ? err.message : String(err);
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }
}
