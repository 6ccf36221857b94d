import { deflateSync } from 'node:zlib'
import { Drawing, Primitive } from './chart.js'

/**
 * Dependency-free PNG rendering: primitives are rasterized onto an RGBA
 * buffer (scanline polygon fill, quads for thick lines, a 5x7 bitmap font
 * for labels) and written out as one IDAT chunk.
 */

// --- tiny 5x7 font ----------------------------------------------------------

const GLYPHS: Record<string, number[]> = {
  '0': [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  '1': [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  '2': [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  '3': [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  '4': [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  '5': [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  '6': [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  '7': [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  '8': [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  '9': [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  a: [0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f],
  b: [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e],
  c: [0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e],
  d: [0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f],
  e: [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
  f: [0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08],
  g: [0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e],
  h: [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11],
  i: [0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e],
  j: [0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c],
  k: [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
  l: [0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  m: [0x00, 0x00, 0x1a, 0x15, 0x15, 0x11, 0x11],
  n: [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11],
  o: [0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e],
  p: [0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10],
  q: [0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01],
  r: [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
  s: [0x00, 0x00, 0x0e, 0x10, 0x0e, 0x01, 0x1e],
  t: [0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06],
  u: [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d],
  v: [0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04],
  w: [0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0a],
  x: [0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11],
  y: [0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e],
  z: [0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f],
  ' ': [0, 0, 0, 0, 0, 0, 0],
  '.': [0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c],
  ',': [0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08],
  '-': [0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00],
  _: [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f],
  '(': [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
  ')': [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
  '=': [0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00],
  '/': [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
  ':': [0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00],
  '%': [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
  '+': [0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00],
}

function glyph(ch: string): number[] {
  return GLYPHS[ch] ?? GLYPHS[ch.toLowerCase()] ?? GLYPHS[' ']
}

// --- canvas ------------------------------------------------------------------

function parseColor(c: string): [number, number, number] {
  const m = /^#([0-9a-f]{6})$/i.exec(c)
  if (!m) return [0, 0, 0]
  const v = parseInt(m[1], 16)
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff]
}

export class Canvas {
  readonly data: Uint8Array

  constructor(readonly width: number, readonly height: number) {
    this.data = new Uint8Array(width * height * 4)
    this.data.fill(255)
  }

  blend(x: number, y: number, rgb: [number, number, number], alpha: number): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return
    const i = (y * this.width + x) * 4
    this.data[i] = Math.round(rgb[0] * alpha + this.data[i] * (1 - alpha))
    this.data[i + 1] = Math.round(rgb[1] * alpha + this.data[i + 1] * (1 - alpha))
    this.data[i + 2] = Math.round(rgb[2] * alpha + this.data[i + 2] * (1 - alpha))
    this.data[i + 3] = 255
  }

  fillRect(x: number, y: number, w: number, h: number, color: string, alpha = 1): void {
    const rgb = parseColor(color)
    for (let yy = Math.max(0, Math.floor(y)); yy < Math.min(this.height, Math.ceil(y + h)); yy++) {
      for (let xx = Math.max(0, Math.floor(x)); xx < Math.min(this.width, Math.ceil(x + w)); xx++) {
        this.blend(xx, yy, rgb, alpha)
      }
    }
  }

  fillPolygon(points: Array<[number, number]>, color: string, alpha = 1): void {
    if (points.length < 3) return
    const rgb = parseColor(color)
    const ys = points.map((p) => p[1])
    const y0 = Math.max(0, Math.floor(Math.min(...ys)))
    const y1 = Math.min(this.height - 1, Math.ceil(Math.max(...ys)))
    for (let y = y0; y <= y1; y++) {
      const yc = y + 0.5
      const xs: number[] = []
      for (let i = 0; i < points.length; i++) {
        const [ax, ay] = points[i]
        const [bx, by] = points[(i + 1) % points.length]
        if ((ay <= yc && by > yc) || (by <= yc && ay > yc)) {
          xs.push(ax + ((yc - ay) / (by - ay)) * (bx - ax))
        }
      }
      xs.sort((a, b) => a - b)
      for (let k = 0; k + 1 < xs.length; k += 2) {
        const xa = Math.max(0, Math.round(xs[k]))
        const xb = Math.min(this.width - 1, Math.round(xs[k + 1]))
        for (let x = xa; x <= xb; x++) this.blend(x, y, rgb, alpha)
      }
    }
  }

  strokeLine(x1: number, y1: number, x2: number, y2: number, color: string, width: number): void {
    const dx = x2 - x1
    const dy = y2 - y1
    const len = Math.hypot(dx, dy)
    if (len < 1e-9) {
      this.fillRect(x1 - width / 2, y1 - width / 2, width, width, color)
      return
    }
    const nx = (-dy / len) * (width / 2)
    const ny = (dx / len) * (width / 2)
    this.fillPolygon(
      [[x1 + nx, y1 + ny], [x2 + nx, y2 + ny], [x2 - nx, y2 - ny], [x1 - nx, y1 - ny]],
      color,
    )
  }

  drawText(x: number, y: number, text: string, size: number,
           anchor: 'start' | 'middle' | 'end', color: string): void {
    const scale = Math.max(1, Math.round(size / 7))
    const cw = 6 * scale
    const total = text.length * cw
    let x0 = Math.round(anchor === 'middle' ? x - total / 2 : anchor === 'end' ? x - total : x)
    const yTop = Math.round(y - 7 * scale)
    const rgb = parseColor(color)
    for (const ch of text) {
      const rows = glyph(ch)
      for (let r = 0; r < 7; r++) {
        for (let c = 0; c < 5; c++) {
          if ((rows[r] >> (4 - c)) & 1) {
            for (let sy = 0; sy < scale; sy++) {
              for (let sx = 0; sx < scale; sx++) {
                this.blend(x0 + c * scale + sx, yTop + r * scale + sy, rgb, 1)
              }
            }
          }
        }
      }
      x0 += cw
    }
  }
}

export function rasterize(d: Drawing): Canvas {
  const canvas = new Canvas(d.width, d.height)
  for (const p of d.prims) {
    drawPrimitive(canvas, p)
  }
  return canvas
}

function drawPrimitive(canvas: Canvas, p: Primitive): void {
  switch (p.kind) {
    case 'rect':
      canvas.fillRect(p.x, p.y, p.w, p.h, p.fill, p.alpha ?? 1)
      break
    case 'polygon':
      canvas.fillPolygon(p.points, p.fill, p.alpha ?? 1)
      break
    case 'polyline':
      for (let i = 0; i + 1 < p.points.length; i++) {
        canvas.strokeLine(p.points[i][0], p.points[i][1],
                          p.points[i + 1][0], p.points[i + 1][1], p.stroke, p.width)
      }
      break
    case 'line':
      canvas.strokeLine(p.x1, p.y1, p.x2, p.y2, p.stroke, p.width)
      break
    case 'text':
      canvas.drawText(p.x, p.y, p.text, p.size, p.anchor, p.color)
      break
  }
}

// --- PNG encoding -------------------------------------------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256)
  for (let n = 0; n < 256; n++) {
    let c = n
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1
    table[n] = c >>> 0
  }
  return table
})()

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff
  for (let i = 0; i < buf.length; i++) c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8)
  return (c ^ 0xffffffff) >>> 0
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(8)
  head.writeUInt32BE(data.length, 0)
  head.write(type, 4, 'ascii')
  const body = Buffer.concat([Buffer.from(type, 'ascii'), Buffer.from(data)])
  const tail = Buffer.alloc(4)
  tail.writeUInt32BE(crc32(body), 0)
  return Buffer.concat([head, Buffer.from(data), tail])
}

export function toPng(d: Drawing): Buffer {
  const canvas = rasterize(d)
  const { width, height, data } = canvas
  const raw = Buffer.alloc((width * 4 + 1) * height)
  for (let y = 0; y < height; y++) {
    raw[y * (width * 4 + 1)] = 0 // filter: none
    Buffer.from(data.buffer, y * width * 4, width * 4).copy(raw, y * (width * 4 + 1) + 1)
  }
  const ihdr = Buffer.alloc(13)
  ihdr.writeUInt32BE(width, 0)
  ihdr.writeUInt32BE(height, 4)
  ihdr[8] = 8 // bit depth
  ihdr[9] = 6 // RGBA
  const signature = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a])
  return Buffer.concat([
    signature,
    chunk('IHDR', ihdr),
    chunk('IDAT', deflateSync(raw, { level: 6 })),
    chunk('IEND', new Uint8Array(0)),
  ])
}
