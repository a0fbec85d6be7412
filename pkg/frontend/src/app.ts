// Page wiring: one live game against the agent. The service URL comes from
// the `api` query parameter (default same host, port 8000).

import { GameClient, GameResult, Transcript } from "./api.js";
import { MalformedSceneError, renderBoard } from "./board.js";
import { ChatPanel } from "./chat.js";
import { TurnState } from "./state.js";

function serviceUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? `${window.location.protocol}//${window.location.hostname}:8000`;
}

function banner(root: HTMLElement, text: string): void {
  const div = document.createElement("div");
  div.className = "error-banner";
  div.textContent = text;
  root.prepend(div);
}

function showResult(root: HTMLElement, result: GameResult, transcript: Transcript): void {
  const panel = document.createElement("div");
  panel.className = `result ${result.success ? "success" : "failure"}`;
  const headline = document.createElement("h2");
  headline.textContent = result.success
    ? "success: you found a shared dot"
    : "no match this time";
  const detail = document.createElement("p");
  detail.textContent = `you chose dot ${result.partner_selection}, ` +
    `the agent chose dot ${result.agent_selection}.`;
  panel.append(headline, detail);

  // armed dot vs agent dot: highlight the agent's pick on the board
  const agentDot = document.querySelector(
    `circle[data-dot-id="${result.agent_selection}"]`);
  agentDot?.classList.add("agent-pick");

  const debug = document.createElement("details");
  debug.className = "debug-panel";
  const summary = document.createElement("summary");
  summary.textContent = "agent debug trace";
  debug.appendChild(summary);
  const pre = document.createElement("pre");
  pre.textContent = transcript.turns
    .filter((t) => t.speaker === "agent")
    .map((t) => `#${t.index} ${t.text}\n  program: ${t.program ?? "-"}\n` +
      `  plan: ${JSON.stringify(t.plan ?? null)}`)
    .join("\n");
  debug.appendChild(pre);
  panel.appendChild(debug);
  root.appendChild(panel);
}

export async function boot(root: HTMLElement, apiUrl?: string): Promise<void> {
  const client = new GameClient(apiUrl ?? serviceUrl());
  const state = new TurnState();

  let session;
  try {
    session = await client.createSession();
  } catch (error) {
    banner(root, `could not start a game: ${String(error)}`);
    return;
  }

  const boardHost = document.createElement("div");
  boardHost.className = "board-host";
  const chatHost = document.createElement("div");
  chatHost.className = "chat-host";
  root.append(boardHost, chatHost);

  let board;
  try {
    board = renderBoard(session.scene, () => {
      confirmButton.disabled = !state.canAct;
    });
  } catch (error) {
    if (error instanceof MalformedSceneError) {
      banner(root, `bad scene payload: ${error.message}`);
      return;
    }
    throw error;
  }
  boardHost.appendChild(board.element);

  const chat = new ChatPanel(chatHost, client, session.session_id, state);
  const confirmButton = document.createElement("button");
  confirmButton.textContent = "select armed dot";
  confirmButton.disabled = true;
  chatHost.appendChild(confirmButton);

  confirmButton.addEventListener("click", async () => {
    const dotId = board.armed();
    if (dotId === null || !state.begin()) {
      return;
    }
    confirmButton.disabled = true;
    try {
      const result = await client.postSelection(session.session_id, dotId);
      state.close();
      const transcript = await client.getTranscript(session.session_id);
      showResult(root, result, transcript);
      chat.input.disabled = true;
      chat.send.disabled = true;
    } catch (error) {
      state.resolve();
      confirmButton.disabled = false;
      banner(root, `selection failed: ${String(error)}`);
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app") as HTMLElement);
}
