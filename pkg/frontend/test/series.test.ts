import { describe, expect, it } from 'vitest'
import { parseCsv, requireColumns } from '../src/csv.js'
import { beliefBands, outcomeCells } from '../src/series.js'

const BELIEFS = `t,method,vehicle_id,p_true_z,p_true_goal
0.0,gofi,n1,0.10,0.50
1.0,gofi,n1,0.30,0.60
0.0,gofi,n1,0.20,0.50
1.0,gofi,n1,0.50,0.70
0.0,gr_only,n1,0.00,0.50
1.0,gr_only,n1,0.00,0.40
`

const OUTCOMES = `scenario,method,seed,outcome,duration_s
3,gofi,0,completed,12.9
3,gofi,1,collision,5.1
3,gr_only,0,collision,5.2
3,gr_only,1,collision,5.4
4,gofi,0,timeout,35.0
`

describe('csv', () => {
  it('parses rows with the header as keys', () => {
    const rows = parseCsv(BELIEFS)
    expect(rows).toHaveLength(6)
    expect(rows[0]).toEqual({
      t: '0.0', method: 'gofi', vehicle_id: 'n1', p_true_z: '0.10', p_true_goal: '0.50',
    })
  })

  it('rejects ragged rows and missing columns', () => {
    expect(() => parseCsv('a,b\n1\n')).toThrow(/expected 2 fields/)
    expect(() => requireColumns(parseCsv(OUTCOMES), ['nope'], 'x')).toThrow(/missing column/)
  })
})

describe('beliefBands', () => {
  it('aggregates seeds into mean and standard error per timestep', () => {
    const bands = beliefBands(parseCsv(BELIEFS), 'p_true_z')
    expect(bands.map((b) => b.method)).toEqual(['gofi', 'gr_only'])
    const gofi = bands[0]
    expect(gofi.t).toEqual([0, 1])
    expect(gofi.mean[0]).toBeCloseTo(0.15, 12)
    expect(gofi.mean[1]).toBeCloseTo(0.4, 12)
    // two seeds at t=1: values 0.3, 0.5 -> se = std/sqrt(2) = 0.1
    expect(gofi.se[1]).toBeCloseTo(0.1, 12)
  })

  it('single seed gives a zero-width band', () => {
    const bands = beliefBands(parseCsv(BELIEFS), 'p_true_z')
    const gr = bands[1]
    expect(gr.se.every((v) => v === 0)).toBe(true)
  })

  it('constant beliefs stay flat', () => {
    const bands = beliefBands(parseCsv(BELIEFS), 'p_true_goal')
    const gr = bands[1]
    expect(gr.mean).toEqual([0.5, 0.4])
  })
})

describe('outcomeCells', () => {
  it('collects collision-free indicators per scenario and method', () => {
    const cells = outcomeCells(parseCsv(OUTCOMES))
    expect(cells.map((c) => `${c.scenario}/${c.method}`)).toEqual(
      ['3/gofi', '3/gr_only', '4/gofi'])
    expect(cells[0].fractions).toEqual([1, 0])
    expect(cells[1].fractions).toEqual([0, 0])
    // timeouts count as collision-free
    expect(cells[2].fractions).toEqual([1])
  })
})
