/**
 * Offset conversion between DOM selections and the service API.
 *
 * The DOM counts UTF-16 code units; the server counts Unicode scalar
 * values. Every offset that crosses the wire goes through here.
 */

/** True when the code unit at index is the low half of a surrogate pair. */
function isLowSurrogateAt(text: string, index: number): boolean {
  if (index <= 0 || index >= text.length) return false;
  const hi = text.charCodeAt(index - 1);
  const lo = text.charCodeAt(index);
  return hi >= 0xd800 && hi <= 0xdbff && lo >= 0xdc00 && lo <= 0xdfff;
}

/**
 * Convert a UTF-16 code-unit offset into a scalar offset.
 * An offset that splits a surrogate pair snaps to the pair start.
 */
export function utf16ToScalar(text: string, utf16Offset: number): number {
  if (utf16Offset < 0 || utf16Offset > text.length) {
    throw new RangeError(`utf-16 offset ${utf16Offset} outside [0, ${text.length}]`);
  }
  let cut = utf16Offset;
  if (isLowSurrogateAt(text, cut)) cut -= 1;
  let scalars = 0;
  for (let i = 0; i < cut; ) {
    const code = text.codePointAt(i)!;
    i += code > 0xffff ? 2 : 1;
    scalars += 1;
  }
  return scalars;
}

/** Convert a scalar offset back into a UTF-16 code-unit offset. */
export function scalarToUtf16(text: string, scalarOffset: number): number {
  if (scalarOffset < 0) {
    throw new RangeError(`scalar offset ${scalarOffset} is negative`);
  }
  let units = 0;
  let seen = 0;
  while (seen < scalarOffset) {
    if (units >= text.length) {
      throw new RangeError(`scalar offset ${scalarOffset} outside the text`);
    }
    const code = text.codePointAt(units)!;
    units += code > 0xffff ? 2 : 1;
    seen += 1;
  }
  return units;
}

/** Number of scalar values in the text. */
export function scalarLength(text: string): number {
  let scalars = 0;
  for (let i = 0; i < text.length; ) {
    const code = text.codePointAt(i)!;
    i += code > 0xffff ? 2 : 1;
    scalars += 1;
  }
  return scalars;
}

/** Slice by scalar offsets, mirroring how the server reads spans. */
export function scalarSlice(text: string, start: number, end: number): string {
  return text.slice(scalarToUtf16(text, start), scalarToUtf16(text, end));
}
