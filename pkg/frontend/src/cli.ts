#!/usr/bin/env node
import { plotBeliefs, plotOutcomes, PlotSpec } from './plots.js'

function usage(): never {
  console.error(
    'usage: gofisim-plots --in DIR --out DIR [--format png|svg] [--scenario all|ID]')
  process.exit(2)
}

export function parseArgs(argv: string[]): PlotSpec {
  const spec: PlotSpec = { inDir: '', outDir: '', format: 'png', scenario: 'all' }
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    const val = argv[i + 1]
    if (val === undefined) usage()
    switch (key) {
      case '--in':
        spec.inDir = val
        break
      case '--out':
        spec.outDir = val
        break
      case '--format':
        if (val !== 'png' && val !== 'svg') usage()
        spec.format = val
        break
      case '--scenario':
        spec.scenario = val
        break
      default:
        usage()
    }
  }
  if (!spec.inDir || !spec.outDir) usage()
  return spec
}

export function main(argv: string[]): number {
  const spec = parseArgs(argv)
  try {
    const files = [...plotBeliefs(spec), ...plotOutcomes(spec)]
    for (const f of files) console.log(`wrote ${f}`)
    return 0
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err))
    return 1
  }
}

if (process.argv[1] && process.argv[1].endsWith('cli.js')) {
  process.exit(main(process.argv.slice(2)))
}
