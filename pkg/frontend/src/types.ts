/** Payload types mirroring docs/api_schema.md. Field names are a contract. */

export interface Topic {
  id: number;
  name: string;
  description: string;
}

export interface SentencePayload {
  id: string;
  ordinal: number;
  text: string;
  prelabel?: number | null;
}

export interface AnnouncementPayload {
  id: string;
  sentences: SentencePayload[];
}

export interface Progress {
  assigned: number;
  labeled: number;
  remaining: number;
}

export interface NextResponse {
  announcement: AnnouncementPayload | null;
  progress: Progress;
}

export interface SubmitPayload {
  sentence_id: string;
  labels: number[];
  irrelevant: boolean;
  comment: string | null;
}

export interface SubmitResponse {
  sentence_id: string;
  annotator_id: string;
  version: number;
}

export const NUM_TOPICS = 20;
