// Typed client for the movietalk chat service HTTP+JSON API.

export interface Opener {
  text: string;
  strategy_id: string;
  source: string;
}

export interface CreateSessionResponse {
  session_id: string;
  opener: Opener;
}

export interface ReplyResponse {
  text: string;
  strategy_id: string | null;
  source: string | null;
  task_complete: boolean;
}

export interface CloseResponse {
  conv_len: number;
  info_gain: number;
  task_success: boolean;
  rating: number | null;
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(`${base}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await resp.json();
  if (!resp.ok) {
    throw new ServiceError(resp.status, body as ApiError);
  }
  return body as T;
}

export class ChatApi {
  constructor(private readonly base: string = "") {}

  createSession(variant: string): Promise<CreateSessionResponse> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ variant }),
    });
  }

  postMessage(sessionId: string, text: string): Promise<ReplyResponse> {
    return request(this.base, `/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  closeSession(sessionId: string, rating: number | null): Promise<CloseResponse> {
    return request(this.base, `/sessions/${sessionId}/close`, {
      method: "POST",
      body: JSON.stringify(rating === null ? {} : { rating }),
    });
  }

  transcript(sessionId: string): Promise<unknown> {
    return request(this.base, `/sessions/${sessionId}`, { method: "GET" });
  }
}
