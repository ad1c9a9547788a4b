// Wire types mirroring the QA service's JSON bodies.

export interface Citation {
  package_name: string;
  version: string;
  score: number;
}

export interface AskResponse {
  answer: string;
  citations: Citation[];
  model_name: string;
  elapsed_ms: number;
}

export interface TtpDocument {
  package_name: string;
  version: string;
  ecosystem: string;
  deceptive_ttp: string;
  execution_ttp: string;
  analysis: string;
  intent_labels?: string[];
}

export interface GraphEdge {
  from: string;
  to: string;
  count: number;
  weight: number;
}

export interface GraphPayload {
  nodes: string[];
  edges: GraphEdge[];
}

export interface HealthResponse {
  status: string;
  index_size: number;
  provider: string;
}

// One exchange in the transcript. While pending the answer is empty and
// no citations are shown; a failed turn keeps the question plus an error
// label so it can be retried.
export interface ChatTurn {
  question: string;
  answer: string;
  citations: Citation[];
  pending: boolean;
  error?: string;
}

export type VectorCategory = "deceptive" | "execution-attack" | "neutral";

export interface ChainPill {
  kind: string;
  detail: string | null;
  category: VectorCategory;
}
