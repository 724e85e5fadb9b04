/**
 * Offset conversion between DOM selections and server annotations.
 *
 * The server counts character offsets in Unicode scalar values (code
 * points), while the DOM reports selection offsets in UTF-16 code units.
 * Materials text is full of characters like subscripts that are one code
 * point but may sit next to astral symbols (two code units), so the
 * conversion must walk the string rather than assume the units agree.
 */

/** Convert a UTF-16 code-unit offset into a scalar-value offset. */
export function utf16ToScalar(text: string, utf16Offset: number): number {
  let scalar = 0;
  let units = 0;
  for (const ch of text) {
    if (units >= utf16Offset) break;
    units += ch.length; // 1 for BMP, 2 for astral
    scalar += 1;
  }
  if (units > utf16Offset) {
    throw new RangeError(`offset ${utf16Offset} splits a surrogate pair`);
  }
  return scalar;
}

/** Convert a scalar-value offset into a UTF-16 code-unit offset. */
export function scalarToUtf16(text: string, scalarOffset: number): number {
  let scalar = 0;
  let units = 0;
  for (const ch of text) {
    if (scalar >= scalarOffset) break;
    units += ch.length;
    scalar += 1;
  }
  if (scalar < scalarOffset) {
    throw new RangeError(`offset ${scalarOffset} beyond end of text (${scalar})`);
  }
  return units;
}

/** Number of Unicode scalar values in the string. */
export function scalarLength(text: string): number {
  let n = 0;
  for (const _ of text) n += 1;
  return n;
}

/** Slice by scalar offsets, mirroring the server's span semantics. */
export function scalarSlice(text: string, start: number, end: number): string {
  return text.slice(scalarToUtf16(text, start), scalarToUtf16(text, end));
}
