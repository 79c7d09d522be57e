// Thin typed client for the session service.

import type { AnswerValue, SessionConfig, SessionView } from './types';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson(resp: Response): Promise<SessionView> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
  }
  return body as SessionView;
}

export class SessionApi {
  constructor(private base: string) {}

  createSession(config: SessionConfig): Promise<SessionView> {
    return fetch(`${this.base}/api/sessions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(config),
    }).then(asJson);
  }

  getSession(id: string): Promise<SessionView> {
    return fetch(`${this.base}/api/sessions/${id}`).then(asJson);
  }

  answer(id: string, response: AnswerValue, queryIndex: number): Promise<SessionView> {
    return fetch(`${this.base}/api/sessions/${id}/answer`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ response, query_index: queryIndex }),
    }).then(asJson);
  }

  stop(id: string): Promise<SessionView> {
    return fetch(`${this.base}/api/sessions/${id}/stop`, { method: 'POST' }).then(asJson);
  }

  delete(id: string): Promise<void> {
    return fetch(`${this.base}/api/sessions/${id}`, { method: 'DELETE' }).then(() => undefined);
  }
}
