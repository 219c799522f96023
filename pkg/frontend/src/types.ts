/** Wire types mirroring the pipeline service's JSON bodies field-for-field. */

export interface Beam {
  text: string;
  score: number;
}

export interface Turn {
  speaker: string;
  text: string;
}

export interface Episode {
  example_id: string;
  turns: Turn[];
  topic?: string | null;
  personas?: Record<string, string> | null;
  gold_knowledge?: string | null;
  gold_response?: string | null;
  gold_answers?: string[] | null;
}

export interface PipelineTrace {
  serialized_knowledge_input: string;
  predicted_knowledge: string;
  injected_knowledge: string | null;
  knowledge_used: string;
  serialized_response_input: string;
  knowledge_beams: Beam[];
  beams: Beam[];
  selected_index: number;
  response: string;
  filter_applied: boolean;
  filter_hit: boolean;
}

export interface BackendDescriptor {
  kind: string;
  parameters: Record<string, unknown>;
}

export interface PipelineConfig {
  knowledge_backend: BackendDescriptor;
  response_backend?: BackendDescriptor;
  shared?: boolean;
  knowledge_open_token?: string;
  knowledge_close_token?: string;
  confidence?: number | null;
  response_beam_size?: number;
  filter_beams?: boolean;
  filtered_beam_size?: number;
}

export interface KnowledgeReply {
  predicted_knowledge: string;
  beams: Beam[];
}

export interface SessionInfo {
  session_id: string;
  episode: Episode;
  config: PipelineConfig;
  seed: number;
  history: PipelineTrace[];
}

export interface RespondBody {
  injected_knowledge?: string;
  confidence?: number;
}
