export type Primitive =
  | { kind: 'rect'; x: number; y: number; w: number; h: number; fill: string; alpha?: number }
  | { kind: 'polygon'; points: Array<[number, number]>; fill: string; alpha?: number }
  | { kind: 'polyline'; points: Array<[number, number]>; stroke: string; width: number }
  | { kind: 'line'; x1: number; y1: number; x2: number; y2: number; stroke: string; width: number }
  | { kind: 'text'; x: number; y: number; text: string; size: number; anchor: 'start' | 'middle' | 'end'; color: string }

export interface Drawing {
  width: number
  height: number
  prims: Primitive[]
}

export const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']

const MARGIN = { left: 58, right: 16, top: 34, bottom: 42 }

interface Scale {
  (v: number): number
}

function linScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0)
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1
  const raw = span / n
  const mag = Math.pow(10, Math.floor(Math.log10(raw)))
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10
  const start = Math.ceil(lo / step) * step
  const ticks: number[] = []
  for (let v = start; v <= hi + 1e-9; v += step) ticks.push(Number(v.toFixed(10)))
  return ticks
}

function fmt(v: number): string {
  return Math.abs(v - Math.round(v)) < 1e-9 ? String(Math.round(v)) : v.toFixed(2)
}

export interface LineSeries {
  label: string
  x: number[]
  y: number[]
  band?: number[] // half-width around y (one standard error)
}

export function lineChart(
  title: string,
  xlabel: string,
  ylabel: string,
  series: LineSeries[],
  width = 640,
  height = 420,
  yDomain: [number, number] = [0, 1],
): Drawing {
  const prims: Primitive[] = []
  prims.push({ kind: 'rect', x: 0, y: 0, w: width, h: height, fill: '#ffffff' })
  const xMax = Math.max(1, ...series.flatMap((s) => s.x))
  const xMin = Math.min(0, ...series.flatMap((s) => s.x))
  const sx = linScale(xMin, xMax, MARGIN.left, width - MARGIN.right)
  const sy = linScale(yDomain[0], yDomain[1], height - MARGIN.bottom, MARGIN.top)

  for (const tv of niceTicks(xMin, xMax)) {
    const x = sx(tv)
    prims.push({ kind: 'line', x1: x, y1: height - MARGIN.bottom, x2: x, y2: MARGIN.top, stroke: '#e0e0e0', width: 1 })
    prims.push({ kind: 'text', x, y: height - MARGIN.bottom + 16, text: fmt(tv), size: 11, anchor: 'middle', color: '#333333' })
  }
  for (const tv of niceTicks(yDomain[0], yDomain[1])) {
    const y = sy(tv)
    prims.push({ kind: 'line', x1: MARGIN.left, y1: y, x2: width - MARGIN.right, y2: y, stroke: '#e0e0e0', width: 1 })
    prims.push({ kind: 'text', x: MARGIN.left - 6, y: y + 4, text: fmt(tv), size: 11, anchor: 'end', color: '#333333' })
  }
  prims.push({ kind: 'line', x1: MARGIN.left, y1: height - MARGIN.bottom, x2: width - MARGIN.right, y2: height - MARGIN.bottom, stroke: '#333333', width: 1 })
  prims.push({ kind: 'line', x1: MARGIN.left, y1: height - MARGIN.bottom, x2: MARGIN.left, y2: MARGIN.top, stroke: '#333333', width: 1 })

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]
    if (s.band) {
      const upper = s.x.map((x, j) => [sx(x), sy(s.y[j] + s.band![j])] as [number, number])
      const lower = s.x.map((x, j) => [sx(x), sy(s.y[j] - s.band![j])] as [number, number]).reverse()
      prims.push({ kind: 'polygon', points: [...upper, ...lower], fill: color, alpha: 0.18 })
    }
    prims.push({
      kind: 'polyline',
      points: s.x.map((x, j) => [sx(x), sy(s.y[j])] as [number, number]),
      stroke: color,
      width: 2,
    })
    const lx = width - MARGIN.right - 130
    const ly = MARGIN.top + 8 + i * 16
    prims.push({ kind: 'line', x1: lx, y1: ly - 4, x2: lx + 18, y2: ly - 4, stroke: color, width: 2 })
    prims.push({ kind: 'text', x: lx + 24, y: ly, text: s.label, size: 11, anchor: 'start', color: '#333333' })
  })

  prims.push({ kind: 'text', x: width / 2, y: 18, text: title, size: 13, anchor: 'middle', color: '#000000' })
  prims.push({ kind: 'text', x: width / 2, y: height - 10, text: xlabel, size: 11, anchor: 'middle', color: '#333333' })
  prims.push({ kind: 'text', x: 14, y: MARGIN.top - 12, text: ylabel, size: 11, anchor: 'start', color: '#333333' })
  return { width, height, prims }
}

export interface BarGroup {
  group: string // scenario
  bars: Array<{ label: string; value: number; lo: number; hi: number }>
}

export function barChart(
  title: string,
  ylabel: string,
  groups: BarGroup[],
  width = 640,
  height = 420,
): Drawing {
  const prims: Primitive[] = []
  prims.push({ kind: 'rect', x: 0, y: 0, w: width, h: height, fill: '#ffffff' })
  const sy = linScale(0, 1, height - MARGIN.bottom, MARGIN.top)
  for (const tv of [0, 0.25, 0.5, 0.75, 1.0]) {
    const y = sy(tv)
    prims.push({ kind: 'line', x1: MARGIN.left, y1: y, x2: width - MARGIN.right, y2: y, stroke: '#e0e0e0', width: 1 })
    prims.push({ kind: 'text', x: MARGIN.left - 6, y: y + 4, text: fmt(tv), size: 11, anchor: 'end', color: '#333333' })
  }
  const plotW = width - MARGIN.left - MARGIN.right
  const groupW = plotW / Math.max(groups.length, 1)
  const labels = [...new Set(groups.flatMap((g) => g.bars.map((b) => b.label)))]

  groups.forEach((g, gi) => {
    const x0 = MARGIN.left + gi * groupW
    const slot = groupW / (g.bars.length + 1)
    g.bars.forEach((b, bi) => {
      const color = PALETTE[labels.indexOf(b.label) % PALETTE.length]
      const bx = x0 + slot * (bi + 0.5)
      const bw = slot * 0.8
      const y = sy(b.value)
      prims.push({ kind: 'rect', x: bx, y, w: bw, h: sy(0) - y, fill: color })
      const cx = bx + bw / 2
      prims.push({ kind: 'line', x1: cx, y1: sy(b.lo), x2: cx, y2: sy(b.hi), stroke: '#222222', width: 1.5 })
      prims.push({ kind: 'line', x1: cx - 4, y1: sy(b.lo), x2: cx + 4, y2: sy(b.lo), stroke: '#222222', width: 1.5 })
      prims.push({ kind: 'line', x1: cx - 4, y1: sy(b.hi), x2: cx + 4, y2: sy(b.hi), stroke: '#222222', width: 1.5 })
    })
    prims.push({
      kind: 'text', x: x0 + groupW / 2, y: height - MARGIN.bottom + 16,
      text: `scenario ${g.group}`, size: 11, anchor: 'middle', color: '#333333',
    })
  })

  labels.forEach((label, i) => {
    const lx = MARGIN.left + 8 + i * 110
    const ly = MARGIN.top - 8
    prims.push({ kind: 'rect', x: lx, y: ly - 9, w: 10, h: 10, fill: PALETTE[i % PALETTE.length] })
    prims.push({ kind: 'text', x: lx + 14, y: ly, text: label, size: 11, anchor: 'start', color: '#333333' })
  })
  prims.push({ kind: 'line', x1: MARGIN.left, y1: sy(0), x2: width - MARGIN.right, y2: sy(0), stroke: '#333333', width: 1 })
  prims.push({ kind: 'text', x: width / 2, y: 18, text: title, size: 13, anchor: 'middle', color: '#000000' })
  prims.push({ kind: 'text', x: 14, y: MARGIN.top - 12, text: ylabel, size: 11, anchor: 'start', color: '#333333' })
  return { width, height, prims }
}
