/** Wire types for the session service HTTP+JSON interface. */

export type Phase = "tutorial" | "teaching" | "testing" | "done";

export interface ButtonOption {
  value: number;
  label: string;
}

export interface CreatedSession {
  session_id: string;
  strategy: string;
  phase: Phase;
  teach_len: number;
  test_len: number;
  options: ButtonOption[];
}

export interface TutorialPayload {
  phase: "tutorial";
  index: number;
  total: number;
  tutorial: { title: string; body: string };
  options: ButtonOption[];
}

export interface TeachingPayload {
  phase: "teaching";
  index: number;
  total: number;
  item_id: string;
  image_uri: string | null;
  options: ButtonOption[];
}

export interface TestingPayload {
  phase: "testing";
  index: number;
  total: number;
  image_uri: string | null;
  options: ButtonOption[];
}

export interface DonePayload {
  phase: "done";
  accuracy: number;
}

export type NextPayload = TutorialPayload | TeachingPayload | TestingPayload | DonePayload;

export interface ExplanationGrid {
  width: number;
  height: number;
  values: number[];
}

export interface TutorialAck {
  phase: "tutorial";
  acknowledged: true;
  next_phase: Phase;
}

export interface TeachingFeedback {
  phase: "teaching";
  index: number;
  correct: boolean;
  correct_class: number;
  correct_class_name: string;
  show_explanation: boolean;
  explanation: ExplanationGrid | null;
  image_uri: string | null;
  alternate_ms: number;
  min_wait_ms: number;
}

export interface TestingAck {
  acknowledged: true;
}

export type RespondPayload = TutorialAck | TeachingFeedback | TestingAck;

export interface SessionResponseRecord {
  phase: string;
  index: number;
  item_id: string;
  choice: number;
  correct: boolean;
  timestamp: number;
}

export interface ResultPayload {
  session_id: string;
  strategy: string;
  accuracy: number;
  confusion: number[][];
  responses: SessionResponseRecord[];
}

export interface ApiErrorBody {
  error: string;
  message: string;
}
