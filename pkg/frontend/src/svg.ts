import { Figure, FigurePanel, FigureSeries } from './figure.js'

/** One fixed style per algorithm/rule pair so figures stay comparable:
 * color encodes the aggregation rule, dashing the algorithm family. */
const RULE_COLOR: Record<string, string> = {
  median: '#1f77b4',
  trimmed: '#2ca02c',
  mean: '#d62728',
}
const ALGO_DASH: Record<string, string> = {
  bcsl: '',
  bcslp: '6,3',
}

const PANEL_W = 420
const PANEL_H = 300
const MARGIN = { top: 36, right: 16, bottom: 42, left: 64 }

function seriesStyle(s: FigureSeries): { color: string; dash: string } {
  return {
    color: RULE_COLOR[s.rule] ?? '#7f7f7f',
    dash: ALGO_DASH[s.algo] ?? '',
  }
}

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

interface Scale {
  toX: (t: number) => number
  toY: (v: number) => number
  ticksY: number[]
}

function makeScale(panel: FigurePanel, rounds: number, logScale: boolean): Scale {
  const values: number[] = []
  for (const s of panel.series) {
    for (let i = 0; i < s.mean.length; i++) {
      const v = s.mean[i]
      if (v === null) continue
      const spread = s.std[i] ?? 0
      values.push(logScale ? v : v + spread)
      values.push(logScale ? v : Math.max(v - spread, 0))
    }
  }
  if (panel.baseline !== null) values.push(panel.baseline)
  let lo = Math.min(...values)
  let hi = Math.max(...values)
  if (logScale) {
    lo = Math.log10(lo)
    hi = Math.log10(hi)
  }
  if (hi - lo < 1e-12) {
    hi += 0.5
    lo -= 0.5
  }
  const pad = 0.06 * (hi - lo)
  lo -= pad
  hi += pad
  const plotW = PANEL_W - MARGIN.left - MARGIN.right
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom
  const toX = (t: number) => MARGIN.left + (rounds === 0 ? 0.5 : t / rounds) * plotW
  const toY = (v: number) => {
    const u = logScale ? Math.log10(v) : v
    return MARGIN.top + (1 - (u - lo) / (hi - lo)) * plotH
  }
  const ticksY: number[] = []
  for (let i = 0; i <= 4; i++) {
    const u = lo + (i / 4) * (hi - lo)
    ticksY.push(logScale ? 10 ** u : u)
  }
  return { toX, toY, ticksY }
}

function fmt(v: number): string {
  if (v === 0) return '0'
  const a = Math.abs(v)
  if (a >= 0.01 && a < 1000) return v.toPrecision(3)
  return v.toExponential(1)
}

function renderPanel(panel: FigurePanel, figure: Figure, ox: number, oy: number): string {
  const scale = makeScale(panel, figure.rounds, figure.logScale)
  const parts: string[] = [`<g transform="translate(${ox},${oy})">`]
  const x0 = MARGIN.left
  const x1 = PANEL_W - MARGIN.right
  const y0 = MARGIN.top
  const y1 = PANEL_H - MARGIN.bottom
  parts.push(
    `<rect x="${x0}" y="${y0}" width="${x1 - x0}" height="${y1 - y0}" fill="none" stroke="#999"/>`,
  )
  if (panel.label) {
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="${y0 - 10}" text-anchor="middle" font-size="12">${esc(panel.label)}</text>`,
    )
  }
  for (const tick of scale.ticksY) {
    const y = scale.toY(tick)
    parts.push(`<line x1="${x0 - 4}" y1="${y}" x2="${x0}" y2="${y}" stroke="#333"/>`)
    parts.push(
      `<text x="${x0 - 8}" y="${y + 4}" text-anchor="end" font-size="10">${fmt(tick)}</text>`,
    )
  }
  for (let t = 0; t <= figure.rounds; t++) {
    const x = scale.toX(t)
    parts.push(`<line x1="${x}" y1="${y1}" x2="${x}" y2="${y1 + 4}" stroke="#333"/>`)
    parts.push(`<text x="${x}" y="${y1 + 16}" text-anchor="middle" font-size="10">${t}</text>`)
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${PANEL_H - 8}" text-anchor="middle" font-size="11">round</text>`,
  )

  if (panel.baseline !== null) {
    const y = scale.toY(panel.baseline)
    parts.push(
      `<line class="baseline" x1="${x0}" y1="${y}" x2="${x1}" y2="${y}" ` +
        `stroke="#555" stroke-dasharray="2,4"/>`,
    )
    parts.push(
      `<text x="${x1 - 4}" y="${y - 4}" text-anchor="end" font-size="10" fill="#555">best line</text>`,
    )
  }

  for (const s of panel.series) {
    const { color, dash } = seriesStyle(s)
    const pts: string[] = []
    const bandUp: string[] = []
    const bandDown: string[] = []
    for (let t = 0; t < s.mean.length; t++) {
      const v = s.mean[t]
      if (v === null) continue
      const x = scale.toX(t)
      pts.push(`${x.toFixed(2)},${scale.toY(v).toFixed(2)}`)
      const spread = s.std[t]
      if (spread !== null && spread > 0) {
        const hi = v + spread
        const lo = figure.logScale ? Math.max(v - spread, v * 1e-3) : v - spread
        bandUp.push(`${x.toFixed(2)},${scale.toY(hi).toFixed(2)}`)
        bandDown.unshift(`${x.toFixed(2)},${scale.toY(lo).toFixed(2)}`)
      }
    }
    if (bandUp.length > 1) {
      parts.push(
        `<polygon class="band" points="${bandUp.join(' ')} ${bandDown.join(' ')}" ` +
          `fill="${color}" fill-opacity="0.15" stroke="none"/>`,
      )
    }
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : ''
    parts.push(
      `<polyline class="series" data-run="${esc(s.runId)}" points="${pts.join(' ')}" ` +
        `fill="none" stroke="${color}" stroke-width="1.5"${dashAttr}/>`,
    )
  }

  let ly = y0 + 12
  for (const s of panel.series) {
    const { color, dash } = seriesStyle(s)
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : ''
    parts.push(
      `<line x1="${x1 - 110}" y1="${ly - 4}" x2="${x1 - 88}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="1.5"${dashAttr}/>`,
    )
    parts.push(
      `<text x="${x1 - 84}" y="${ly}" font-size="10">${esc(`${s.algo}-${s.rule}`)}</text>`,
    )
    ly += 14
  }
  parts.push('</g>')
  return parts.join('\n')
}

/** Lay the panels out in a row and emit a standalone SVG document. */
export function renderSvg(figure: Figure): string {
  const cols = Math.min(figure.panels.length, 3)
  const rowsCount = Math.ceil(figure.panels.length / cols)
  const width = cols * PANEL_W
  const height = rowsCount * PANEL_H
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<title>${esc(figure.metric)} per communication round</title>`,
  ]
  figure.panels.forEach((panel, i) => {
    const ox = (i % cols) * PANEL_W
    const oy = Math.floor(i / cols) * PANEL_H
    parts.push(renderPanel(panel, figure, ox, oy))
  })
  parts.push('</svg>')
  return parts.join('\n')
}
