/** Length-prefixed JSON framing, identical to the host's link framing:
 * 4-byte big-endian payload length, then UTF-8 JSON. Browser-safe
 * (typed arrays only, no Buffer). */

const MAX_FRAME_BYTES = 1 << 20;

export function encodePayload(obj: unknown): Uint8Array {
  const body = new TextEncoder().encode(JSON.stringify(obj));
  if (body.length > MAX_FRAME_BYTES) {
    throw new Error(`payload of ${body.length} bytes exceeds ${MAX_FRAME_BYTES}`);
  }
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/** Incremental stream decoder; a strict prefix of a frame yields nothing. */
export class FrameAccumulator {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): unknown[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const out: unknown[] = [];
    for (;;) {
      if (this.buffer.length < 4) return out;
      const length = new DataView(
        this.buffer.buffer,
        this.buffer.byteOffset,
        4,
      ).getUint32(0, false);
      if (length === 0 || length > MAX_FRAME_BYTES) {
        throw new Error(`bad payload length ${length}`);
      }
      if (this.buffer.length < 4 + length) return out;
      const body = this.buffer.subarray(4, 4 + length);
      out.push(JSON.parse(new TextDecoder().decode(body)));
      this.buffer = this.buffer.slice(4 + length);
    }
  }

  get pendingBytes(): number {
    return this.buffer.length;
  }
}
