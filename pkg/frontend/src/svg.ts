import { Drawing, Primitive } from './chart.js'

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

function pts(points: Array<[number, number]>): string {
  return points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(' ')
}

function prim(p: Primitive): string {
  switch (p.kind) {
    case 'rect':
      return `<rect x="${p.x.toFixed(2)}" y="${p.y.toFixed(2)}" width="${p.w.toFixed(2)}" height="${p.h.toFixed(2)}" fill="${p.fill}"${p.alpha !== undefined ? ` fill-opacity="${p.alpha}"` : ''}/>`
    case 'polygon':
      return `<polygon points="${pts(p.points)}" fill="${p.fill}"${p.alpha !== undefined ? ` fill-opacity="${p.alpha}"` : ''}/>`
    case 'polyline':
      return `<polyline points="${pts(p.points)}" fill="none" stroke="${p.stroke}" stroke-width="${p.width}" stroke-linejoin="round" stroke-linecap="round"/>`
    case 'line':
      return `<line x1="${p.x1.toFixed(2)}" y1="${p.y1.toFixed(2)}" x2="${p.x2.toFixed(2)}" y2="${p.y2.toFixed(2)}" stroke="${p.stroke}" stroke-width="${p.width}"/>`
    case 'text':
      return `<text x="${p.x.toFixed(2)}" y="${p.y.toFixed(2)}" font-size="${p.size}" text-anchor="${anchor(p.anchor)}" fill="${p.color}" font-family="Helvetica, Arial, sans-serif">${esc(p.text)}</text>`
  }
}

function anchor(a: 'start' | 'middle' | 'end'): string {
  return a
}

export function toSvg(d: Drawing): string {
  const body = d.prims.map(prim).join('\n  ')
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${d.width}" height="${d.height}" viewBox="0 0 ${d.width} ${d.height}">\n  ${body}\n</svg>\n`
}
