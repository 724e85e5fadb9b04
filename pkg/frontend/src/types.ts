/** Wire types exchanged with the review API. */

export interface SpanDto {
  start: number;
  end: number;
  symbol: string;
}

export interface EntityTypeDto {
  symbol: string;
  name: string;
  descriptions: string[];
}

export interface RelationTypeDto {
  label: string;
  source: string;
  target: string;
}

export interface SchemaDto {
  schema_id: string;
  version: number;
  entity_types: EntityTypeDto[];
  relation_types: RelationTypeDto[];
}

export interface ExtractionDto {
  status: string;
  attempts: number;
  generation: number;
  warnings: string[];
}

export interface DocSummaryDto {
  doc_id: string;
  state: string;
  origin: string;
  n_spans: number;
  extraction: ExtractionDto;
}

export interface HistoryEntryDto {
  timestamp: string;
  actor: string;
  action: string;
  diff: Record<string, unknown>;
}

export interface DocDetailDto {
  doc_id: string;
  text: string;
  spans: SpanDto[];
  state: string;
  origin: string;
  extraction: ExtractionDto;
  history: HistoryEntryDto[];
}

export interface KgNodeDto {
  node_name: string;
  symbol: string;
  co_references: string[];
  related_entities: Record<string, string>[];
}

export interface KgEdgeDto {
  source: number;
  relation: string;
  target: number;
}

export interface KgDto {
  doc_id: string;
  nodes: KgNodeDto[];
  edges: KgEdgeDto[];
}

export interface KgResponseDto {
  doc_id: string;
  status: string;
  kg: KgDto | null;
  raw?: string | null;
}

/** A researcher's pending span selection inside one document. */
export interface SpanSelection {
  docId: string;
  start: number;
  end: number;
  symbol: string;
}
