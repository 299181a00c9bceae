import * as fs from 'fs'

import { MetricName, PlotError } from './metrics.js'

interface Stat {
  mean: number
  std: number
}

/** Per-run summary written next to each metrics CSV. */
export interface RunSummary {
  kind: 'run'
  run_id: string
  algo: string
  rule: string
  init: string
  topology: { n: number; m: number }
  per_t: Array<Record<string, Stat | null | number>>
  baseline: Record<string, Stat | null>
}

/** Aligned multi-variant summary written by the suite command. */
export interface SuiteSummary {
  kind: 'suite'
  rounds: number
  series: Array<{
    run_id: string
    algo: string
    rule: string
    init: string
    n: number
    m: number
    metric: MetricName
    values: (number | null)[]
    baseline: Stat | null
  }>
}

export type Summary = RunSummary | SuiteSummary

export function readSummary(path: string): Summary {
  if (!fs.existsSync(path)) {
    throw new PlotError(`summary file not found: ${path}`)
  }
  let parsed: unknown
  try {
    parsed = JSON.parse(fs.readFileSync(path, 'utf8'))
  } catch (err) {
    throw new PlotError(`summary file ${path} is not valid JSON: ${(err as Error).message}`)
  }
  if (typeof parsed !== 'object' || parsed === null) {
    throw new PlotError(`summary file ${path} must contain a JSON object`)
  }
  const obj = parsed as Record<string, unknown>
  if (Array.isArray(obj.series)) {
    return { kind: 'suite', ...(obj as object) } as SuiteSummary
  }
  if (Array.isArray(obj.per_t)) {
    return { kind: 'run', ...(obj as object) } as RunSummary
  }
  throw new PlotError(`summary file ${path} has neither "per_t" nor "series"`)
}

export interface SummarySeries {
  runId: string
  algo: string
  rule: string
  init: string
  n: number | null
  m: number | null
  mean: (number | null)[]
  std: (number | null)[]
  baseline: number | null
}

/** Extract the mean curves for one metric, exactly as stored. */
export function summarySeries(summary: Summary, metric: MetricName): SummarySeries[] {
  if (summary.kind === 'suite') {
    return summary.series
      .filter((s) => s.metric === metric)
      .map((s) => ({
        runId: s.run_id,
        algo: s.algo,
        rule: s.rule,
        init: s.init,
        n: s.n,
        m: s.m,
        mean: s.values,
        std: s.values.map(() => null),
        baseline: s.baseline ? s.baseline.mean : null,
      }))
  }
  const mean: (number | null)[] = []
  const std: (number | null)[] = []
  for (const entry of summary.per_t) {
    const stat = entry[metric] as Stat | null
    mean.push(stat ? stat.mean : null)
    std.push(stat ? stat.std : null)
  }
  const baseline = summary.baseline[metric]
  return [
    {
      runId: summary.run_id,
      algo: summary.algo,
      rule: summary.rule,
      init: summary.init,
      n: summary.topology ? summary.topology.n : null,
      m: summary.topology ? summary.topology.m : null,
      mean,
      std,
      baseline: baseline ? baseline.mean : null,
    },
  ]
}
