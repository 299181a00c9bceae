#!/usr/bin/env node
import * as fs from 'fs'
import * as path from 'path'

import { buildFigure, PlotSpec } from './figure.js'
import { PlotError } from './metrics.js'
import { renderSvg } from './svg.js'

const USAGE = `usage: plot --metrics <csv> [--summary <json>] --metric <name> --out <file.svg> [--baseline <value>]

Renders convergence curves (mean per round, +/-1 std band when available,
optional horizontal best-line) from the simulator's metrics CSV and summary
JSON. Metrics: err_star, err_hat, test_error. Output is SVG.`

export function parseArgs(argv: string[]): PlotSpec {
  const flags = new Map<string, string>()
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    if (!key.startsWith('--')) throw new PlotError(`unexpected argument "${key}"\n${USAGE}`)
    const value = argv[i + 1]
    if (value === undefined) throw new PlotError(`flag ${key} needs a value\n${USAGE}`)
    flags.set(key.slice(2), value)
  }
  const known = new Set(['metrics', 'summary', 'metric', 'out', 'baseline'])
  for (const key of flags.keys()) {
    if (!known.has(key)) throw new PlotError(`unknown flag --${key}\n${USAGE}`)
  }
  const metrics = flags.get('metrics')
  const metric = flags.get('metric')
  const out = flags.get('out')
  if (!metrics || !metric || !out) {
    throw new PlotError(`--metrics, --metric and --out are required\n${USAGE}`)
  }
  const spec: PlotSpec = {
    metricsPath: metrics,
    metric: metric as PlotSpec['metric'],
    outPath: out,
    summaryPath: flags.get('summary'),
  }
  const baseline = flags.get('baseline')
  if (baseline !== undefined) {
    const value = Number(baseline)
    if (Number.isNaN(value)) throw new PlotError(`--baseline must be a number, got "${baseline}"`)
    spec.baselineValue = value
  }
  return spec
}

export function run(argv: string[]): number {
  let spec: PlotSpec
  try {
    spec = parseArgs(argv)
  } catch (err) {
    console.error(`plot: ${(err as Error).message}`)
    return 2
  }
  try {
    const figure = buildFigure(spec)
    const svg = renderSvg(figure)
    let outPath = spec.outPath
    if (path.extname(outPath).toLowerCase() === '.png') {
      // no rasterizer dependency: emit the vector image alongside
      outPath = outPath.slice(0, -4) + '.svg'
      console.error(`plot: raster output not supported, writing vector image to ${outPath}`)
    }
    fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true })
    fs.writeFileSync(outPath, svg + '\n')
    console.log(outPath)
    return 0
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`plot: ${err.message}`)
      return 1
    }
    throw err
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)))
}
