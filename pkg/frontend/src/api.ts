/**
 * Typed client for the subscore service API. All traffic goes through
 * these endpoints; the UI holds no state the server cannot rebuild.
 */

export interface Scale {
  min: number;
  max: number;
}

export interface SubtraitDoc {
  id: string;
  name: string;
  description: string;
  scale: Scale;
  rubric: string[];
}

export interface TraitDoc {
  id: string;
  name: string;
  scale: Scale;
  subtraits: SubtraitDoc[];
}

export interface WorkUnit {
  response_id: string;
  read_index: number;
  position: number;
  total: number;
  tree_version: string;
  item: {
    id: string;
    title: string;
    stimulus: string;
    passages: string[];
  };
  response: {
    id: string;
    text: string;
  };
  traits: TraitDoc[];
}

export interface NextAssignment {
  complete: boolean;
  remaining: number;
  assignment: WorkUnit | null;
}

export interface SpanPayload {
  start: number;
  end: number;
  snapshot: string;
}

export interface ReadPayload {
  response_id: string;
  read_index: number;
  trait_scores: Record<string, number>;
  subtrait_scores: Record<string, number>;
  evidence: Record<string, SpanPayload[]>;
}

export interface StoredRead {
  response_id: string;
  rater_id: string;
  read_index: number;
  trait_scores: Record<string, number>;
  subtrait_scores: Record<string, number>;
  evidence: Record<string, SpanPayload[]>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = {
      method,
      headers: { authorization: `Bearer ${this.token}` },
    };
    if (body !== undefined) {
      init.headers = { ...init.headers, "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    let parsed: unknown = null;
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        throw new ApiError(response.status, `non-JSON response from ${path}`);
      }
    }
    if (!response.ok) {
      const detail =
        parsed !== null && typeof parsed === "object" && "detail" in parsed
          ? String((parsed as { detail: unknown }).detail)
          : text || response.statusText;
      throw new ApiError(response.status, detail);
    }
    return parsed;
  }

  async nextAssignment(): Promise<NextAssignment> {
    return (await this.request("GET", "/api/assignments/next")) as NextAssignment;
  }

  async submitRead(payload: ReadPayload): Promise<StoredRead> {
    const doc = (await this.request("POST", "/api/reads", payload)) as { read: StoredRead };
    return doc.read;
  }

  async readsFor(marker: string): Promise<StoredRead[]> {
    const path = `/api/reads?marker=${encodeURIComponent(marker)}`;
    const doc = (await this.request("GET", path)) as { reads: StoredRead[] };
    return doc.reads;
  }
}
