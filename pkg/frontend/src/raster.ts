import type { Stroke } from "./types.js";

/**
 * Rasterize strokes to an 8-bit grayscale bitmap and encode it as PNG,
 * without touching the DOM so the exact payload bytes are unit-testable
 * and identical across browsers.
 */

export function rasterizeStrokes(
  strokes: Stroke[],
  width: number,
  height: number,
): Uint8Array {
  const pix = new Uint8Array(width * height);
  for (const stroke of strokes) {
    const radius = Math.max(stroke.brushWidth / 2, 0.5);
    const pts = stroke.points;
    for (let i = 0; i < pts.length; i++) {
      const a = pts[i];
      const b = pts[Math.min(i + 1, pts.length - 1)];
      stampSegment(pix, width, height, a.x, a.y, b.x, b.y, radius);
    }
  }
  return pix;
}

function stampSegment(
  pix: Uint8Array,
  width: number,
  height: number,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  radius: number,
): void {
  const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
  for (let s = 0; s <= steps; s++) {
    const t = s / steps;
    const cx = x0 + (x1 - x0) * t;
    const cy = y0 + (y1 - y0) * t;
    const lo = Math.floor(-radius);
    const hi = Math.ceil(radius);
    for (let dy = lo; dy <= hi; dy++) {
      for (let dx = lo; dx <= hi; dx++) {
        if (dx * dx + dy * dy > radius * radius) continue;
        const px = Math.round(cx) + dx;
        const py = Math.round(cy) + dy;
        if (px >= 0 && px < width && py >= 0 && py < height) {
          pix[py * width + px] = 255;
        }
      }
    }
  }
}

// -- minimal PNG writer (8-bit grayscale, stored-deflate) -------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (const b of bytes) c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (const byte of bytes) {
    a = (a + byte) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32(v: number): Uint8Array {
  return new Uint8Array([(v >>> 24) & 0xff, (v >>> 16) & 0xff, (v >>> 8) & 0xff, v & 0xff]);
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const typeBytes = new Uint8Array([...type].map((c) => c.charCodeAt(0)));
  const body = concat([typeBytes, data]);
  return concat([u32(data.length), body, u32(crc32(body))]);
}

function concat(parts: Uint8Array[]): Uint8Array {
  const out = new Uint8Array(parts.reduce((n, p) => n + p.length, 0));
  let ofs = 0;
  for (const p of parts) {
    out.set(p, ofs);
    ofs += p.length;
  }
  return out;
}

/** zlib stream using stored (uncompressed) deflate blocks. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const parts: Uint8Array[] = [new Uint8Array([0x78, 0x01])];
  const max = 65535;
  for (let ofs = 0; ofs < raw.length || ofs === 0; ofs += max) {
    const block = raw.subarray(ofs, Math.min(ofs + max, raw.length));
    const final = ofs + max >= raw.length ? 1 : 0;
    const len = block.length;
    parts.push(
      new Uint8Array([final, len & 0xff, len >> 8, ~len & 0xff, (~len >> 8) & 0xff]),
      block,
    );
    if (raw.length === 0) break;
  }
  parts.push(u32(adler32(raw)));
  return concat(parts);
}

export function encodeGrayPng(
  pix: Uint8Array,
  width: number,
  height: number,
): Uint8Array {
  if (pix.length !== width * height) {
    throw new Error(`pixel buffer ${pix.length} != ${width}x${height}`);
  }
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: none
    raw.set(pix.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const ihdr = concat([
    u32(width),
    u32(height),
    new Uint8Array([8, 0, 0, 0, 0]), // 8-bit grayscale
  ]);
  return concat([
    new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

export function bytesToBase64(bytes: Uint8Array): string {
  const ALPHA = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  let out = "";
  for (let i = 0; i < bytes.length; i += 3) {
    const b0 = bytes[i];
    const b1 = i + 1 < bytes.length ? bytes[i + 1] : 0;
    const b2 = i + 2 < bytes.length ? bytes[i + 2] : 0;
    out += ALPHA[b0 >> 2] + ALPHA[((b0 & 3) << 4) | (b1 >> 4)];
    out += i + 1 < bytes.length ? ALPHA[((b1 & 15) << 2) | (b2 >> 6)] : "=";
    out += i + 2 < bytes.length ? ALPHA[b2 & 63] : "=";
  }
  return out;
}

export function strokesToPngB64(
  strokes: Stroke[],
  width: number,
  height: number,
): string {
  return bytesToBase64(encodeGrayPng(rasterizeStrokes(strokes, width, height), width, height));
}
