// Typed client for the game session API. The client only ever sees the
// payloads the service sends the human player; nothing here reaches for
// hidden state.

export interface DotPayload {
  id: number;
  x: number;
  y: number;
  size: number;
  color: number;
}

export interface ScenePayload {
  dots: DotPayload[];
  center: [number, number];
  radius: number;
}

export interface CreateSessionResponse {
  session_id: string;
  scene: ScenePayload;
  your_turn: boolean;
}

export interface AgentReply {
  kind: "utterance" | "selection";
  text: string;
}

export interface GameResult {
  success: boolean;
  agent_selection: number | null;
  partner_selection: number | null;
  turn_count: number;
}

export interface TranscriptTurn {
  index: number;
  speaker: string;
  text: string;
  program?: string | null;
  plan?: Record<string, unknown> | null;
  eig_trace?: unknown[] | null;
  fallback?: boolean;
}

export interface Transcript {
  session_id: string;
  closed: boolean;
  turns: TranscriptTurn[];
  shared?: number[] | null;
  result?: GameResult | null;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, (body as { detail?: string }).detail ?? response.statusText);
  }
  return body as T;
}

export class GameClient {
  constructor(private baseUrl: string) {}

  createSession(k = 4, nPerView = 7, seed?: number): Promise<CreateSessionResponse> {
    const body: Record<string, number> = { k, n_per_view: nPerView };
    if (seed !== undefined) {
      body.seed = seed;
    }
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  postUtterance(sessionId: string, text: string): Promise<AgentReply> {
    return request(`${this.baseUrl}/sessions/${sessionId}/utterance`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  postSelection(sessionId: string, dotId: number): Promise<GameResult> {
    return request(`${this.baseUrl}/sessions/${sessionId}/selection`, {
      method: "POST",
      body: JSON.stringify({ dot_id: dotId }),
    });
  }

  getTranscript(sessionId: string): Promise<Transcript> {
    return request(`${this.baseUrl}/sessions/${sessionId}/transcript`);
  }
}
