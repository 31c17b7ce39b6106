// Mirrors of the review wire API payloads. The client never mutates server
// state except via POST /api/decision.

export type Verdict = "keep" | "remove";

export interface RubricScores {
  correctness: number;
  hallucination_freedom: number;
  tool_use: number;
  overall: number;
}

export interface Finding {
  code: string;
  severity: string;
  path: string;
  message: string;
}

export interface Span {
  start: number;
  end: number;
  trainable: boolean;
}

export interface TrajectoryListItem {
  id: string;
  verdict: Verdict;
  finding_count: number;
  scores?: RubricScores | null;
  human_verdict?: Verdict;
}

export interface TrajectoryList {
  total: number;
  offset: number;
  items: TrajectoryListItem[];
}

export interface Critique {
  scores: RubricScores;
  rationale: string;
  verdict: Verdict;
}

export interface DecisionRecord {
  trajectory_id: string;
  human_verdict: Verdict;
  reviewer?: string;
  timestamp?: string;
  note?: string;
}

export interface TrajectoryDetail {
  id: string;
  raw: string;
  unified: unknown;
  findings: Finding[];
  verdict: Verdict;
  critique: Critique | null;
  stages: {
    rendered_text: string;
    spans: Span[];
  };
  decision: DecisionRecord | null;
}

export interface DecisionForm {
  trajectory_id: string;
  human_verdict: Verdict;
  reviewer: string;
  note: string;
}
