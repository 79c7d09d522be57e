// Renders a SessionView into the page. The DOM is rebuilt from the server's
// response on every transition, so what is displayed is exactly what the
// service said: every cell and trace point carries the raw values in data
// attributes (JSON number encoding, byte-for-byte).

import type { SessionView } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const num = (v: number): string => JSON.stringify(v);

export function renderQueryCard(doc: Document, view: SessionView): HTMLElement {
  const card = el(doc, 'div', 'query-card');
  card.id = 'query-card';
  const q = view.current_query;
  if (view.terminal || q === null) {
    const last = view.trace[view.trace.length - 1];
    card.appendChild(el(doc, 'h2', 'query-title', 'Session finished'));
    const summary = el(doc, 'p', 'summary');
    summary.id = 'summary';
    summary.textContent =
      `${view.certified ? 'Certified' : 'Uncertified'} regret bound ${last.mmr} ` +
      `after ${view.query_count} queries ` +
      `(${view.queried_pairs.length} distinct pairs, reason: ${view.terminated_reason ?? 'n/a'})`;
    summary.dataset.mmr = num(last.mmr);
    summary.dataset.certified = String(view.certified);
    card.appendChild(summary);
    return card;
  }
  const title = el(doc, 'h2', 'query-title', `Is r(${q.s},${q.a}) ≥ ${q.b}?`);
  title.id = 'query-title';
  title.dataset.s = String(q.s);
  title.dataset.a = String(q.a);
  title.dataset.b = num(q.b);
  title.dataset.queryIndex = String(q.query_index);
  card.appendChild(title);
  const buttons = el(doc, 'div', 'answer-buttons');
  for (const value of ['yes', 'no', 'unsure'] as const) {
    const btn = el(doc, 'button', `answer answer-${value}`, value);
    btn.dataset.answer = value;
    buttons.appendChild(btn);
  }
  card.appendChild(buttons);
  return card;
}

export function renderHeatmap(doc: Document, view: SessionView): HTMLElement {
  const table = el(doc, 'table', 'heatmap');
  table.id = 'heatmap';
  const queried = new Set(view.queried_pairs.map(([s, a]) => `${s}:${a}`));
  for (let s = 0; s < view.n; s++) {
    const row = el(doc, 'tr');
    for (let a = 0; a < view.k; a++) {
      const cell = el(doc, 'td', 'cell');
      cell.id = `cell-${s}-${a}`;
      const lo = view.intervals.lo[s][a];
      const hi = view.intervals.hi[s][a];
      const width0 = view.initial_intervals.hi[s][a] - view.initial_intervals.lo[s][a];
      const ratio = width0 > 0 ? (hi - lo) / width0 : 0;
      cell.dataset.lo = num(lo);
      cell.dataset.hi = num(hi);
      cell.dataset.gapRatio = String(ratio);
      if (queried.has(`${s}:${a}`)) cell.classList.add('queried');
      if (view.current_query && view.current_query.s === s && view.current_query.a === a) {
        cell.classList.add('active');
      }
      // warm color for wide-open intervals, pale for resolved ones
      cell.style.backgroundColor = `rgba(214, 69, 50, ${(0.12 + 0.88 * ratio).toFixed(3)})`;
      cell.title = `r(${s},${a}) ∈ [${lo}, ${hi}]`;
      cell.appendChild(el(doc, 'span', 'cell-range', `[${lo}, ${hi}]`));
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  return table;
}

export function renderTrace(doc: Document, view: SessionView): HTMLElement {
  const wrap = el(doc, 'div', 'trace');
  wrap.id = 'trace';
  const points = view.trace;
  const maxMmr = Math.max(...points.map((p) => p.mmr), 1e-12);
  const w = 420;
  const h = 120;
  const step = points.length > 1 ? w / (points.length - 1) : 0;
  const svgNS = 'http://www.w3.org/2000/svg';
  const svg = doc.createElementNS(svgNS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${w} ${h}`);
  svg.setAttribute('class', 'trace-svg');
  const line = doc.createElementNS(svgNS, 'polyline');
  line.setAttribute('fill', 'none');
  line.setAttribute('stroke', '#d64532');
  line.setAttribute(
    'points',
    points.map((p, i) => `${(i * step).toFixed(1)},${(h - (p.mmr / maxMmr) * (h - 6)).toFixed(1)}`).join(' '),
  );
  svg.appendChild(line);
  wrap.appendChild(svg);
  const list = el(doc, 'ol', 'trace-points');
  list.id = 'trace-points';
  for (const p of points) {
    const item = el(doc, 'li', 'trace-point');
    item.dataset.queryIndex = String(p.query_index);
    item.dataset.mmr = num(p.mmr);
    item.dataset.chi = num(p.chi);
    item.textContent = `#${p.query_index}: regret ${p.mmr}, χ ${p.chi}`;
    list.appendChild(item);
  }
  wrap.appendChild(list);
  return wrap;
}

export function renderPolicy(doc: Document, view: SessionView): HTMLElement {
  const box = el(doc, 'div', 'policy');
  box.id = 'policy';
  box.appendChild(el(doc, 'h3', undefined, `Current robust policy (${view.criterion})`));
  if (!view.policy) {
    box.appendChild(el(doc, 'p', undefined, 'not solved yet'));
    return box;
  }
  const table = el(doc, 'table', 'policy-table');
  for (let s = 0; s < view.n; s++) {
    const row = el(doc, 'tr');
    row.appendChild(el(doc, 'th', undefined, `s${s}`));
    for (let a = 0; a < view.k; a++) {
      const cell = el(doc, 'td', 'policy-cell', view.policy[s][a].toFixed(3));
      cell.dataset.prob = num(view.policy[s][a]);
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  box.appendChild(table);
  return box;
}

export function renderStatus(doc: Document, view: SessionView): HTMLElement {
  const bar = el(doc, 'div', 'status');
  bar.id = 'status';
  bar.dataset.sessionId = view.id;
  bar.dataset.terminal = String(view.terminal);
  bar.textContent =
    `session ${view.id} · ${view.criterion.toUpperCase()}-${view.strategy.toUpperCase()} ` +
    `· ${view.query_count}/${view.budget} queries · ` +
    (view.terminal ? `finished (${view.terminated_reason})` : 'awaiting answer');
  return bar;
}

export function renderSession(doc: Document, root: HTMLElement, view: SessionView): void {
  root.textContent = '';
  root.appendChild(renderStatus(doc, view));
  root.appendChild(renderQueryCard(doc, view));
  root.appendChild(renderHeatmap(doc, view));
  root.appendChild(renderTrace(doc, view));
  root.appendChild(renderPolicy(doc, view));
}
