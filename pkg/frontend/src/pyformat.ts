// Number/string formatting that matches the server's Python message text,
// so inline validation errors are byte-identical to 422 responses.

export function pyFloat(value: number): string {
  if (Number.isFinite(value) && Number.isInteger(value) && Math.abs(value) < 1e16) {
    return `${value}.0`;
  }
  return String(value);
}

export function pyRepr(text: string): string {
  // Python repr() of simple identifiers; field names never need escaping
  return `'${text}'`;
}
