/** Wire codec for the frame service stream protocol.
 *
 * Every message is a 4-byte big-endian header length, a UTF-8 header of
 * newline-separated key=value lines, then a raw payload whose size the
 * payloadBytes field declares.  The field vocabulary is fixed; values
 * may contain "=" but never a newline.  payloadBytes is always derived
 * from the actual payload on encode and is authoritative on decode.
 */

export const HEADER_FIELDS = [
  "type", "id", "width", "height", "fov", "radius", "maxSteps", "camTet",
  "camMatrix", "weightsName", "colormap", "supersample", "status",
  "payloadBytes",
] as const;

export type HeaderField = (typeof HEADER_FIELDS)[number];
export type Header = Partial<Record<HeaderField, string>>;

const FIELD_SET: ReadonlySet<string> = new Set(HEADER_FIELDS);

export class ProtocolError extends Error {}

const utf8Encoder = new TextEncoder();
const utf8Decoder = new TextDecoder("utf-8", { fatal: true });

export interface Message {
  fields: Header;
  payload: Uint8Array;
}

export interface Decoded extends Message {
  /** total bytes consumed from the front of the buffer */
  consumed: number;
}

export function encodeMessage(
  fields: Record<string, string | number>,
  payload: Uint8Array = new Uint8Array(0),
): Uint8Array {
  const lines: string[] = [];
  for (const [key, value] of Object.entries(fields)) {
    if (key === "payloadBytes") continue;
    if (!FIELD_SET.has(key)) {
      throw new ProtocolError(`unknown header field ${JSON.stringify(key)}`);
    }
    const text = String(value);
    if (text.includes("\n")) {
      throw new ProtocolError("header values cannot contain newlines");
    }
    lines.push(`${key}=${text}`);
  }
  lines.push(`payloadBytes=${payload.length}`);
  const header = utf8Encoder.encode(lines.join("\n"));
  const out = new Uint8Array(4 + header.length + payload.length);
  new DataView(out.buffer).setUint32(0, header.length, false);
  out.set(header, 4);
  out.set(payload, 4 + header.length);
  return out;
}

/** Decode one message from the front of `buf`.
 *
 * Returns null when the buffer does not yet hold a complete message
 * (a streaming caller should wait for more bytes).  Trailing bytes
 * beyond the first message are left alone; `consumed` tells the caller
 * how far to advance.  Malformed framing throws ProtocolError.
 */
export function decodeMessage(buf: Uint8Array): Decoded | null {
  if (buf.length < 4) return null;
  const headerLen = new DataView(buf.buffer, buf.byteOffset, buf.length)
    .getUint32(0, false);
  if (buf.length < 4 + headerLen) return null;

  let header: string;
  try {
    header = utf8Decoder.decode(buf.subarray(4, 4 + headerLen));
  } catch {
    throw new ProtocolError("header is not UTF-8");
  }
  const fields: Header = {};
  for (const line of header.split("\n")) {
    if (!line) continue;
    const eq = line.indexOf("=");
    if (eq < 0) throw new ProtocolError(`header line without '=': ${line}`);
    const key = line.slice(0, eq);
    if (!FIELD_SET.has(key)) {
      throw new ProtocolError(`unknown header field ${JSON.stringify(key)}`);
    }
    fields[key as HeaderField] = line.slice(eq + 1);
  }
  if (fields.payloadBytes === undefined) {
    throw new ProtocolError("header is missing payloadBytes");
  }
  if (!/^\d+$/.test(fields.payloadBytes)) {
    throw new ProtocolError(`bad payloadBytes ${fields.payloadBytes}`);
  }
  const nbytes = Number(fields.payloadBytes);
  const start = 4 + headerLen;
  if (buf.length < start + nbytes) return null;
  return {
    fields,
    payload: buf.slice(start, start + nbytes),
    consumed: start + nbytes,
  };
}

/** Incremental reassembler: feed arbitrary byte chunks, get messages. */
export class MessageReader {
  private buffer = new Uint8Array(0);

  feed(chunk: Uint8Array): Message[] {
    const joined = new Uint8Array(this.buffer.length + chunk.length);
    joined.set(this.buffer, 0);
    joined.set(chunk, this.buffer.length);
    this.buffer = joined;

    const messages: Message[] = [];
    for (;;) {
      const decoded = decodeMessage(this.buffer);
      if (decoded === null) break;
      messages.push({ fields: decoded.fields, payload: decoded.payload });
      this.buffer = this.buffer.slice(decoded.consumed);
    }
    return messages;
  }
}
