import * as fs from 'fs'

/** Column layout of the simulator's metrics CSV (fixed, header mandatory). */
export const CSV_COLUMNS = [
  'run_id',
  'replicate',
  'algo',
  'rule',
  't',
  'err_star',
  'err_hat',
  'test_error',
  'inner_iters',
  'elapsed_ms',
] as const

export const METRIC_NAMES = ['err_star', 'err_hat', 'test_error'] as const
export type MetricName = (typeof METRIC_NAMES)[number]

export interface MetricsRow {
  runId: string
  replicate: number
  algo: string
  rule: string
  t: number
  err_star: number | null
  err_hat: number | null
  test_error: number | null
  innerIters: number
  elapsedMs: number
}

/** Input problems are reported through this type so the CLI can turn them
 * into diagnostics instead of half-written output. */
export class PlotError extends Error {}

function parseNumber(cell: string, row: number, column: string): number {
  const value = Number(cell)
  if (cell.trim() === '' || Number.isNaN(value)) {
    throw new PlotError(`non-numeric value ${JSON.stringify(cell)} in column ${column}, data row ${row}`)
  }
  return value
}

function parseOptional(cell: string, row: number, column: string): number | null {
  if (cell === '') return null
  return parseNumber(cell, row, column)
}

/** Parse the metrics CSV. The format carries no quoting, one sample per row. */
export function readMetricsCsv(path: string): MetricsRow[] {
  if (!fs.existsSync(path)) {
    throw new PlotError(`metrics file not found: ${path}`)
  }
  const lines = fs.readFileSync(path, 'utf8').split('\n').filter((ln) => ln.length > 0)
  if (lines.length === 0) {
    throw new PlotError(`empty metrics file: ${path}`)
  }
  const header = lines[0].split(',')
  if (header.join(',') !== CSV_COLUMNS.join(',')) {
    throw new PlotError(
      `unexpected CSV header in ${path}: got "${lines[0]}", expected "${CSV_COLUMNS.join(',')}"`,
    )
  }
  if (lines.length === 1) {
    throw new PlotError(`metrics file has a header but no data rows: ${path}`)
  }
  const rows: MetricsRow[] = []
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(',')
    if (cells.length !== CSV_COLUMNS.length) {
      throw new PlotError(`data row ${i} has ${cells.length} cells, expected ${CSV_COLUMNS.length}`)
    }
    rows.push({
      runId: cells[0],
      replicate: parseNumber(cells[1], i, 'replicate'),
      algo: cells[2],
      rule: cells[3],
      t: parseNumber(cells[4], i, 't'),
      err_star: parseOptional(cells[5], i, 'err_star'),
      err_hat: parseOptional(cells[6], i, 'err_hat'),
      test_error: parseOptional(cells[7], i, 'test_error'),
      innerIters: parseNumber(cells[8], i, 'inner_iters'),
      elapsedMs: parseNumber(cells[9], i, 'elapsed_ms'),
    })
  }
  return rows
}

export interface AggregatedSeries {
  runId: string
  algo: string
  rule: string
  /** mean per round; null where every replicate was missing the metric */
  mean: (number | null)[]
  /** sample standard deviation per round (0 for a single replicate) */
  std: (number | null)[]
}

/** Replicate-mean curve per run id, in first-appearance order. */
export function aggregateByRun(rows: MetricsRow[], metric: MetricName): AggregatedSeries[] {
  const order: string[] = []
  const byRun = new Map<string, MetricsRow[]>()
  for (const row of rows) {
    if (!byRun.has(row.runId)) {
      byRun.set(row.runId, [])
      order.push(row.runId)
    }
    byRun.get(row.runId)!.push(row)
  }
  const out: AggregatedSeries[] = []
  for (const runId of order) {
    const runRows = byRun.get(runId)!
    const rounds = Math.max(...runRows.map((r) => r.t))
    const mean: (number | null)[] = []
    const std: (number | null)[] = []
    for (let t = 0; t <= rounds; t++) {
      const vals = runRows.filter((r) => r.t === t).map((r) => r[metric]).filter(
        (v): v is number => v !== null,
      )
      if (vals.length === 0) {
        mean.push(null)
        std.push(null)
        continue
      }
      const m = vals.reduce((a, b) => a + b, 0) / vals.length
      const s =
        vals.length > 1
          ? Math.sqrt(vals.reduce((a, b) => a + (b - m) * (b - m), 0) / (vals.length - 1))
          : 0
      mean.push(m)
      std.push(s)
    }
    out.push({ runId, algo: runRows[0].algo, rule: runRows[0].rule, mean, std })
  }
  return out
}
