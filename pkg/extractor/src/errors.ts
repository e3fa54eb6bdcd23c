/** Error taxonomy mirrored from the engine's CLI: usage -> 1, data -> 2. */
export class ExtractError extends Error {
  readonly kind: "usage" | "data";

  constructor(kind: "usage" | "data", message: string) {
    super(message);
    this.kind = kind;
    this.name = "ExtractError";
  }
}
