import { mkdtempSync, readFileSync, writeFileSync, mkdirSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { describe, expect, it } from 'vitest'
import { barChart, lineChart } from '../src/chart.js'
import { toSvg } from '../src/svg.js'
import { rasterize, toPng } from '../src/raster.js'
import { plotBeliefs, plotOutcomes } from '../src/plots.js'
import { parseArgs } from '../src/cli.js'

function sampleLine() {
  return lineChart('demo', 't (s)', 'pr', [
    { label: 'gofi', x: [0, 1, 2, 3], y: [0.1, 0.4, 0.7, 0.9], band: [0, 0.05, 0.05, 0.02] },
    { label: 'gr_only', x: [0, 1, 2, 3], y: [0.1, 0.1, 0.1, 0.1], band: [0, 0, 0, 0] },
  ])
}

describe('svg output', () => {
  it('contains the series and the band polygon', () => {
    const svg = toSvg(sampleLine())
    expect(svg).toContain('<svg')
    expect((svg.match(/<polyline/g) ?? []).length).toBe(2)
    expect(svg).toContain('<polygon')
    expect(svg).toContain('gofi')
  })

  it('escapes text content', () => {
    const chart = lineChart('a<b', 'x', 'y', [{ label: 'm', x: [0, 1], y: [0, 1] }])
    expect(toSvg(chart)).toContain('a&lt;b')
  })
})

describe('png output', () => {
  it('produces a structurally valid PNG with the right dimensions', () => {
    const png = toPng(sampleLine())
    expect([...png.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a])
    expect(png.subarray(12, 16).toString('ascii')).toBe('IHDR')
    expect(png.readUInt32BE(16)).toBe(640)
    expect(png.readUInt32BE(20)).toBe(420)
    expect(png.subarray(png.length - 8, png.length - 4).toString('ascii')).toBe('IEND')
  })

  it('rasterization actually paints the series color', () => {
    const canvas = rasterize(sampleLine())
    let blue = 0
    for (let i = 0; i < canvas.data.length; i += 4) {
      if (canvas.data[i] === 0x1f && canvas.data[i + 1] === 0x77 && canvas.data[i + 2] === 0xb4) blue++
    }
    expect(blue).toBeGreaterThan(100)
  })

  it('is byte-deterministic', () => {
    const a = toPng(sampleLine())
    const b = toPng(sampleLine())
    expect(a.equals(b)).toBe(true)
  })
})

describe('bar chart', () => {
  it('draws one bar per cell with interval whiskers', () => {
    const chart = barChart('outcomes', 'fraction', [
      { group: '1', bars: [{ label: 'gofi', value: 1.0, lo: 1.0, hi: 1.0 },
                           { label: 'gr_only', value: 0.4, lo: 0.2, hi: 0.6 }] },
      { group: '2', bars: [{ label: 'gofi', value: 0.9, lo: 0.75, hi: 1.0 }] },
    ])
    const svg = toSvg(chart)
    const rects = (svg.match(/<rect/g) ?? []).length
    expect(rects).toBeGreaterThanOrEqual(4) // background + 3 bars (+ legend)
    expect(svg).toContain('scenario 1')
    expect(svg).toContain('scenario 2')
  })
})

function writeFixtureTree(root: string) {
  const beliefs = ['t,method,vehicle_id,p_true_z,p_true_goal']
  for (const method of ['gofi', 'gr_only']) {
    for (let seed = 0; seed < 3; seed++) {
      for (let t = 0; t <= 10; t++) {
        const z = method === 'gofi' ? Math.min(0.1 + 0.08 * t + 0.01 * seed, 1) : 0
        const g = 0.5 + 0.04 * t
        beliefs.push(`${t}.0,${method},n1,${z.toFixed(4)},${g.toFixed(4)}`)
      }
    }
  }
  mkdirSync(join(root, 'scenario_3'), { recursive: true })
  writeFileSync(join(root, 'scenario_3', 'beliefs.csv'), beliefs.join('\n') + '\n')
  const outcomes = ['scenario,method,seed,outcome,duration_s']
  for (const method of ['gofi', 'gr_only']) {
    for (let seed = 0; seed < 20; seed++) {
      const outcome = method === 'gofi' || seed % 2 ? 'completed' : 'collision'
      outcomes.push(`3,${method},${seed},${outcome},12.0`)
    }
  }
  writeFileSync(join(root, 'outcomes.csv'), outcomes.join('\n') + '\n')
}

describe('end-to-end plotting', () => {
  it('renders belief and outcome figures from a CSV tree', () => {
    const root = mkdtempSync(join(tmpdir(), 'plots-'))
    writeFixtureTree(root)
    const out = join(root, 'figs')
    const spec = { inDir: root, outDir: out, format: 'svg' as const, scenario: 'all' }
    const files = [...plotBeliefs(spec), ...plotOutcomes(spec)]
    expect(files).toHaveLength(3)
    const zSvg = readFileSync(join(out, 'scenario_3_true_z.svg'), 'utf8')
    expect(zSvg).toContain('gofi')
    expect(zSvg).toContain('gr_only')
    const bars = readFileSync(join(out, 'outcomes.svg'), 'utf8')
    expect(bars).toContain('scenario 3')
  })

  it('renders png when requested and rejects a missing scenario', () => {
    const root = mkdtempSync(join(tmpdir(), 'plots-'))
    writeFixtureTree(root)
    const out = join(root, 'figs')
    const files = plotBeliefs({ inDir: root, outDir: out, format: 'png', scenario: '3' })
    const png = readFileSync(files[0])
    expect(png.subarray(1, 4).toString('ascii')).toBe('PNG')
    expect(() => plotBeliefs({ inDir: root, outDir: out, format: 'png', scenario: '9' }))
      .toThrow(/no scenario/)
  })

  it('never mutates its inputs', () => {
    const root = mkdtempSync(join(tmpdir(), 'plots-'))
    writeFixtureTree(root)
    const before = readFileSync(join(root, 'outcomes.csv'), 'utf8')
    plotOutcomes({ inDir: root, outDir: join(root, 'figs'), format: 'svg', scenario: 'all' })
    expect(readFileSync(join(root, 'outcomes.csv'), 'utf8')).toBe(before)
  })
})

describe('cli argument parsing', () => {
  it('parses the documented flags', () => {
    const spec = parseArgs(['--in', 'a', '--out', 'b', '--format', 'svg', '--scenario', '2'])
    expect(spec).toEqual({ inDir: 'a', outDir: 'b', format: 'svg', scenario: '2' })
  })
})
