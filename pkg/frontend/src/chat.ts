// Chat exchange: append alternating speaker lines, keep the input disabled
// while a reply is pending, and surface transport errors with a retry
// affordance instead of losing the turn.

import type { AgentReply, GameClient } from "./api.js";
import { TurnState } from "./state.js";

export class ChatPanel {
  readonly log: HTMLUListElement;
  readonly input: HTMLInputElement;
  readonly send: HTMLButtonElement;
  readonly status: HTMLElement;

  constructor(
    root: HTMLElement,
    private client: GameClient,
    private sessionId: string,
    private state: TurnState,
    private onAgentSelected?: () => void,
  ) {
    this.log = document.createElement("ul");
    this.log.className = "chat-log";
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "say something about your dots";
    this.send = document.createElement("button");
    this.send.textContent = "send";
    this.status = document.createElement("p");
    this.status.className = "status";
    root.append(this.log, this.input, this.send, this.status);
    this.send.addEventListener("click", () => void this.submit());
    this.input.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") {
        void this.submit();
      }
    });
  }

  append(speaker: "you" | "agent", text: string): void {
    const item = document.createElement("li");
    item.className = `msg ${speaker}`;
    item.textContent = `${speaker}: ${text}`;
    this.log.appendChild(item);
  }

  private setPending(pending: boolean): void {
    this.input.disabled = pending;
    this.send.disabled = pending;
  }

  /** Send the input box content; resolves with the agent reply or null when
   * the submission was blocked (empty input or a turn already pending). */
  async submit(): Promise<AgentReply | null> {
    const text = this.input.value.trim();
    if (!text) {
      return null;
    }
    if (!this.state.begin()) {
      return null;
    }
    this.setPending(true);
    this.append("you", text);
    this.input.value = "";
    try {
      const reply = await this.client.postUtterance(this.sessionId, text);
      this.append("agent", reply.text);
      if (reply.kind === "selection") {
        this.status.textContent = "the agent made its selection: pick your dot and confirm";
        this.onAgentSelected?.();
      }
      return reply;
    } catch (error) {
      this.status.textContent = `send failed (${String(error)}); press send to retry`;
      this.input.value = text;  // keep the message for retry
      this.log.removeChild(this.log.lastChild as Node);
      return null;
    } finally {
      this.state.resolve();
      this.setPending(false);
    }
  }
}
