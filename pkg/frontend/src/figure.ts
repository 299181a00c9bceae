import {
  AggregatedSeries,
  METRIC_NAMES,
  MetricName,
  PlotError,
  aggregateByRun,
  readMetricsCsv,
} from './metrics.js'
import { readSummary, summarySeries } from './summary.js'

export interface PlotSpec {
  metricsPath: string
  summaryPath?: string
  metric: MetricName
  baselineValue?: number
  outPath: string
}

export interface FigureSeries {
  runId: string
  algo: string
  rule: string
  init: string
  mean: (number | null)[]
  std: (number | null)[]
}

export interface FigurePanel {
  /** panel key: topology x initialization when known */
  label: string
  series: FigureSeries[]
  baseline: number | null
}

export interface Figure {
  metric: MetricName
  logScale: boolean
  rounds: number
  panels: FigurePanel[]
}

function checkMetric(metric: string): MetricName {
  if (!(METRIC_NAMES as readonly string[]).includes(metric)) {
    throw new PlotError(
      `unknown metric "${metric}"; expected one of ${METRIC_NAMES.join(', ')}`,
    )
  }
  return metric as MetricName
}

/** Assemble the plot data. With a summary file the plotted means are taken
 * from it verbatim (no re-aggregation drift); otherwise they are replicate
 * means recomputed from the CSV. */
export function buildFigure(spec: PlotSpec): Figure {
  const metric = checkMetric(spec.metric)
  const rows = readMetricsCsv(spec.metricsPath)
  if (rows.every((r) => r[metric] === null)) {
    throw new PlotError(
      `metric "${metric}" has no values in ${spec.metricsPath} (column is empty)`,
    )
  }

  let series: FigureSeries[]
  let panelKeys: Map<string, string>
  let baseline: number | null = null
  if (spec.summaryPath) {
    const summary = readSummary(spec.summaryPath)
    const fromSummary = summarySeries(summary, metric)
    if (fromSummary.length === 0) {
      throw new PlotError(`summary ${spec.summaryPath} has no series for metric "${metric}"`)
    }
    const csvRuns = new Set(rows.map((r) => r.runId))
    for (const s of fromSummary) {
      if (!csvRuns.has(s.runId)) {
        throw new PlotError(
          `summary series "${s.runId}" has no rows in ${spec.metricsPath}; ` +
            'metrics and summary must come from the same run',
        )
      }
    }
    series = fromSummary
    panelKeys = new Map(
      fromSummary.map((s) => [
        s.runId,
        s.n !== null ? `n=${s.n}, m=${s.m}, init=${s.init}` : '',
      ]),
    )
    const baselines = fromSummary.map((s) => s.baseline).filter((b): b is number => b !== null)
    if (baselines.length > 0) {
      baseline = baselines.reduce((a, b) => a + b, 0) / baselines.length
    }
  } else {
    const aggregated: AggregatedSeries[] = aggregateByRun(rows, metric)
    series = aggregated.map((s) => ({ ...s, init: '' }))
    panelKeys = new Map(aggregated.map((s) => [s.runId, '']))
  }
  if (spec.baselineValue !== undefined) {
    baseline = spec.baselineValue
  }

  const panels = new Map<string, FigurePanel>()
  for (const s of series) {
    const key = panelKeys.get(s.runId) ?? ''
    if (!panels.has(key)) {
      panels.set(key, { label: key, series: [], baseline })
    }
    panels.get(key)!.series.push(s)
  }
  const rounds = Math.max(...series.map((s) => s.mean.length - 1))
  // error curves span orders of magnitude; classification error does not
  const logScale =
    metric !== 'test_error' &&
    series.every((s) => s.mean.every((v) => v === null || v > 0)) &&
    (baseline === null || baseline > 0)
  return { metric, logScale, rounds, panels: [...panels.values()] }
}
