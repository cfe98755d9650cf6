// Typed client for the search service. The UI is a pure client: every number
// it renders originates from one of these responses.

export interface Candidate {
  text: string;
  source: string;
  score: number;
}

export interface AutocompleteResponse {
  prefix: string;
  ranker: string;
  candidates: Candidate[];
  timings_us: Record<string, number>;
}

export interface TagSpan {
  start: number;
  end: number;
  type: string;
}

export interface ResultDoc {
  doc_id: number;
  vertical: string;
  score: number;
  fields: Record<string, string>;
}

export interface Suggestion {
  text: string;
  score: number;
}

export interface SearchResponse {
  query: string;
  vertical: string | null;
  intent: Record<string, number>;
  tags: TagSpan[];
  strategy: string;
  results: ResultDoc[];
  suggestions: Suggestion[];
  suggestions_timed_out: boolean;
  timings_us: Record<string, number>;
}

export interface Api {
  autocomplete(prefix: string, n: number): Promise<AutocompleteResponse>;
  search(query: string, size: number): Promise<SearchResponse>;
}

export class HttpApi implements Api {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) {
      const body = await resp.text();
      throw new Error(`service error ${resp.status}: ${body}`);
    }
    return resp.json() as Promise<T>;
  }

  autocomplete(prefix: string, n: number): Promise<AutocompleteResponse> {
    return this.get(`/autocomplete?prefix=${encodeURIComponent(prefix)}&n=${n}`);
  }

  search(query: string, size: number): Promise<SearchResponse> {
    return this.get(`/search?q=${encodeURIComponent(query)}&size=${size}`);
  }
}
