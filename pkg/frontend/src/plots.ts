import { readFileSync, readdirSync, writeFileSync, mkdirSync, existsSync } from 'node:fs'
import { join } from 'node:path'
import { parseCsv, requireColumns, Row } from './csv.js'
import { beliefBands, outcomeCells } from './series.js'
import { barChart, BarGroup, Drawing, lineChart, LineSeries } from './chart.js'
import { toSvg } from './svg.js'
import { toPng } from './raster.js'
import { bootstrapCI, mean } from './stats.js'

export interface PlotSpec {
  inDir: string
  outDir: string
  format: 'png' | 'svg'
  scenario: string // 'all' or a scenario id
}

function writeDrawing(d: Drawing, path: string, format: 'png' | 'svg'): string {
  const file = `${path}.${format}`
  if (format === 'svg') writeFileSync(file, toSvg(d))
  else writeFileSync(file, toPng(d))
  return file
}

function beliefSeries(rows: Row[], column: string): LineSeries[] {
  return beliefBands(rows, column).map((band) => ({
    label: band.method,
    x: band.t,
    y: band.mean,
    band: band.se,
  }))
}

/** One figure per scenario: Pr(true z) and Pr(true goal) vs time. */
export function plotBeliefs(spec: PlotSpec): string[] {
  const dirs = readdirSync(spec.inDir, { withFileTypes: true })
    .filter((e) => e.isDirectory() && e.name.startsWith('scenario_'))
    .map((e) => e.name.slice('scenario_'.length))
    .filter((sid) => spec.scenario === 'all' || sid === spec.scenario)
    .sort()
  if (dirs.length === 0) {
    throw new Error(`no scenario_<id>/ directories under ${spec.inDir}`)
  }
  mkdirSync(spec.outDir, { recursive: true })
  const written: string[] = []
  for (const sid of dirs) {
    const file = join(spec.inDir, `scenario_${sid}`, 'beliefs.csv')
    if (!existsSync(file)) throw new Error(`missing ${file}`)
    const rows = parseCsv(readFileSync(file, 'utf8'))
    requireColumns(rows, ['t', 'method', 'vehicle_id', 'p_true_z', 'p_true_goal'],
                   `beliefs.csv (scenario ${sid})`)
    const zChart = lineChart(
      `scenario ${sid}: belief in the true occluded state`,
      't (s)', 'pr(true z)', beliefSeries(rows, 'p_true_z'))
    written.push(writeDrawing(zChart, join(spec.outDir, `scenario_${sid}_true_z`), spec.format))
    const gChart = lineChart(
      `scenario ${sid}: belief in the true goal`,
      't (s)', 'pr(true goal)', beliefSeries(rows, 'p_true_goal'))
    written.push(writeDrawing(gChart, join(spec.outDir, `scenario_${sid}_true_goal`), spec.format))
  }
  return written
}

/** Grouped bars of collision-free fraction with bootstrap 95% intervals. */
export function plotOutcomes(spec: PlotSpec): string[] {
  const file = join(spec.inDir, 'outcomes.csv')
  if (!existsSync(file)) throw new Error(`missing ${file}`)
  const rows = parseCsv(readFileSync(file, 'utf8'))
  requireColumns(rows, ['scenario', 'method', 'seed', 'outcome', 'duration_s'],
                 'outcomes.csv')
  const filtered = spec.scenario === 'all'
    ? rows
    : rows.filter((r) => r['scenario'] === spec.scenario)
  if (filtered.length === 0) throw new Error(`no rows for scenario ${spec.scenario}`)
  const cells = outcomeCells(filtered)
  const groups = new Map<string, BarGroup>()
  for (const cell of cells) {
    let g = groups.get(cell.scenario)
    if (!g) {
      g = { group: cell.scenario, bars: [] }
      groups.set(cell.scenario, g)
    }
    const [lo, hi] = bootstrapCI(cell.fractions)
    g.bars.push({ label: cell.method, value: mean(cell.fractions), lo, hi })
  }
  mkdirSync(spec.outDir, { recursive: true })
  const chart = barChart('fraction of trials without a collision',
                         'collision-free fraction', [...groups.values()])
  return [writeDrawing(chart, join(spec.outDir, 'outcomes'), spec.format)]
}
