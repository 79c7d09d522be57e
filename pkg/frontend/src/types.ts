// Shapes served by the elicitation service; the view is rendered verbatim
// from these (the client never derives bounds or regret itself).

export type QueryView = {
  s: number;
  a: number;
  b: number;
  epsilon: number;
  query_index: number;
};

export type TracePoint = {
  query_index: number;
  mmr: number;
  maximin_value: number;
  chi: number;
  distinct_pairs: number;
  elapsed_ms: number;
  true_regret?: number; // simulated sessions only
};

export type IntervalMatrix = {
  lo: number[][];
  hi: number[][];
};

export type SessionView = {
  id: string;
  mode: 'simulated' | 'human';
  criterion: string;
  strategy: string;
  solver_mode: string;
  n: number;
  k: number;
  terminal: boolean;
  terminated_reason: string | null;
  certified: boolean;
  current_query: QueryView | null;
  intervals: IntervalMatrix;
  initial_intervals: IntervalMatrix;
  queried_pairs: [number, number][];
  query_count: number;
  budget: number;
  tau: number | null;
  trace: TracePoint[];
  policy: number[][] | null;
  occupancy: number[] | null;
};

export type SessionConfig = {
  generator: { type: 'random' | 'autonomic'; [key: string]: unknown };
  criterion: string;
  strategy: string;
  solver_mode: string;
  mode: 'simulated' | 'human';
  budget?: number;
};

export type AnswerValue = 'yes' | 'no' | 'unsure';
