/**
 * Pure highlight segmentation: (text, spans) -> ordered segments.
 *
 * Rendering never mutates state, so re-rendering identical data yields
 * identical segments, and concatenating the segment texts reproduces the
 * source exactly — the invariant the annotation view is built on.
 */

import { scalarSlice, scalarLength } from "./offsets.js";
import type { SpanDto } from "./types.js";

export interface Segment {
  text: string;
  /** Scalar offsets into the source document. */
  start: number;
  end: number;
  /** Entity symbol when the segment is highlighted, null for plain text. */
  symbol: string | null;
  /** Index into the spans array, for delete/retype controls. */
  spanIndex: number | null;
}

/** Split text into plain and highlighted segments covering every character. */
export function segmentText(text: string, spans: SpanDto[]): Segment[] {
  const length = scalarLength(text);
  const ordered = spans
    .map((span, spanIndex) => ({ ...span, spanIndex }))
    .filter((s) => s.start < s.end && s.start >= 0 && s.end <= length)
    .sort((a, b) => a.start - b.start || a.end - b.end);

  const segments: Segment[] = [];
  let cursor = 0;
  for (const span of ordered) {
    if (span.start < cursor) continue; // overlapping spans cannot render; skip
    if (span.start > cursor) {
      segments.push({
        text: scalarSlice(text, cursor, span.start),
        start: cursor,
        end: span.start,
        symbol: null,
        spanIndex: null,
      });
    }
    segments.push({
      text: scalarSlice(text, span.start, span.end),
      start: span.start,
      end: span.end,
      symbol: span.symbol,
      spanIndex: span.spanIndex,
    });
    cursor = span.end;
  }
  if (cursor < length) {
    segments.push({
      text: scalarSlice(text, cursor, length),
      start: cursor,
      end: length,
      symbol: null,
      spanIndex: null,
    });
  }
  return segments;
}

const PALETTE = [
  "#ffd54f",
  "#81d4fa",
  "#a5d6a7",
  "#f48fb1",
  "#ce93d8",
  "#ffab91",
  "#80cbc4",
  "#e6ee9c",
  "#b0bec5",
  "#fff176",
];

/**
 * One stable color per symbol: derived from the symbol's own characters,
 * so the same symbol is colored identically in every view and session.
 */
export function symbolColor(symbol: string): string {
  let hash = 0;
  for (let i = 0; i < symbol.length; i++) {
    hash = (hash * 31 + symbol.charCodeAt(i)) >>> 0;
  }
  return PALETTE[hash % PALETTE.length];
}
