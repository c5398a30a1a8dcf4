import type { ContributionPayload, TermPoint } from "./types";

// Display precision used everywhere a payload number reaches the screen.
export const fmtProbability = (p: number): string => p.toFixed(3);
export const fmtContribution = (s: number): string =>
  `${s >= 0 ? "+" : ""}${s.toFixed(4)}`;
export const fmtMargin = (m: number): string => m.toFixed(3);
export const fmtImportance = (v: number): string => v.toFixed(4);

const SVG_NS = "http://www.w3.org/2000/svg";
const POSITIVE = "#2c7fb8";
const NEGATIVE = "#d95f0e";

function svgElement(tag: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

function text(x: number, y: number, content: string, anchor = "start"): SVGElement {
  const node = svgElement("text", {
    x, y, "text-anchor": anchor, "font-size": 11, "dominant-baseline": "middle",
  });
  node.textContent = content;
  return node;
}

/**
 * Signed horizontal contribution bars, largest magnitude first, with the
 * intercept shown as the anchoring baseline entry. Bar lengths are display
 * scaling only; the labels carry the exact payload values.
 */
export function contributionChart(
  contributions: ContributionPayload[],
  intercept: number,
): SVGElement {
  const rowHeight = 22;
  const labelWidth = 230;
  const plotWidth = 320;
  const height = (contributions.length + 1) * rowHeight + 14;
  const svg = svgElement("svg", {
    width: labelWidth + plotWidth + 90,
    height,
    role: "img",
    class: "contribution-chart",
  });
  const maxMag = Math.max(1e-12, ...contributions.map((c) => Math.abs(c.contribution)));
  const zeroX = labelWidth + plotWidth / 2;
  svg.appendChild(svgElement("line", {
    x1: zeroX, y1: 4, x2: zeroX, y2: height - 4, stroke: "#555", "stroke-width": 1,
  }));

  const interceptRow = text(labelWidth - 6, rowHeight / 2 + 4, "intercept (base-rate log-odds)", "end");
  interceptRow.setAttribute("class", "intercept-label");
  svg.appendChild(interceptRow);
  const interceptValue = text(zeroX + plotWidth / 2 + 8, rowHeight / 2 + 4,
    fmtContribution(intercept));
  interceptValue.setAttribute("class", "intercept-value");
  svg.appendChild(interceptValue);

  contributions.forEach((contribution, index) => {
    const y = (index + 1) * rowHeight + 6;
    const magnitude = (Math.abs(contribution.contribution) / maxMag) * (plotWidth / 2);
    const barX = contribution.contribution >= 0 ? zeroX : zeroX - magnitude;
    const bar = svgElement("rect", {
      x: barX, y, width: Math.max(magnitude, 0.5), height: rowHeight - 8,
      fill: contribution.contribution >= 0 ? POSITIVE : NEGATIVE,
      class: "contribution-bar",
      "data-feature": contribution.feature,
    });
    svg.appendChild(bar);
    const label = `${contribution.feature} = ${contribution.value ?? "missing"}`;
    svg.appendChild(text(labelWidth - 6, y + (rowHeight - 8) / 2, label, "end"));
    const valueText = text(zeroX + plotWidth / 2 + 8, y + (rowHeight - 8) / 2,
      fmtContribution(contribution.contribution));
    valueText.setAttribute("class", "contribution-value");
    valueText.setAttribute("data-feature", contribution.feature);
    svg.appendChild(valueText);
  });
  return svg;
}

/** Shape function: categorical/binary terms render as bars, missing first. */
export function termBarChart(points: TermPoint[]): SVGElement {
  const barWidth = 56;
  const plotHeight = 140;
  const svg = svgElement("svg", {
    width: points.length * (barWidth + 10) + 50,
    height: plotHeight + 60,
    class: "term-chart term-bars",
  });
  const maxMag = Math.max(1e-12, ...points.map((p) => Math.abs(p.score)));
  const zeroY = plotHeight / 2 + 10;
  points.forEach((point, index) => {
    const x = 40 + index * (barWidth + 10);
    const magnitude = (Math.abs(point.score) / maxMag) * (plotHeight / 2 - 6);
    const y = point.score >= 0 ? zeroY - magnitude : zeroY;
    svg.appendChild(svgElement("rect", {
      x, y, width: barWidth, height: Math.max(magnitude, 0.5),
      fill: point.score >= 0 ? POSITIVE : NEGATIVE,
      class: "term-bar",
      "data-bin": point.bin,
    }));
    const tick = text(x + barWidth / 2, plotHeight + 30, point.bin, "middle");
    tick.setAttribute("class", "term-bin-label");
    svg.appendChild(tick);
    const score = text(x + barWidth / 2, plotHeight + 46, fmtContribution(point.score), "middle");
    score.setAttribute("class", "term-score");
    score.setAttribute("data-bin", point.bin);
    svg.appendChild(score);
  });
  svg.appendChild(svgElement("line", {
    x1: 30, y1: zeroY, x2: points.length * (barWidth + 10) + 45, y2: zeroY,
    stroke: "#555", "stroke-width": 1,
  }));
  return svg;
}

/** Continuous terms as a step plot over the bin intervals (missing slot shown
 * separately in the caption, not on the axis). */
export function termStepChart(points: TermPoint[]): SVGElement {
  const data = points.filter((p) => p.bin !== "missing");
  const stepWidth = 18;
  const plotHeight = 140;
  const width = data.length * stepWidth + 70;
  const svg = svgElement("svg", {
    width, height: plotHeight + 40, class: "term-chart term-step",
  });
  const maxMag = Math.max(1e-12, ...data.map((p) => Math.abs(p.score)));
  const zeroY = plotHeight / 2 + 10;
  const scaleY = (score: number) => zeroY - (score / maxMag) * (plotHeight / 2 - 6);
  let path = "";
  data.forEach((point, index) => {
    const x0 = 40 + index * stepWidth;
    const y = scaleY(point.score);
    path += index === 0 ? `M ${x0} ${y}` : ` L ${x0} ${y}`;
    path += ` L ${x0 + stepWidth} ${y}`;
  });
  svg.appendChild(svgElement("path", {
    d: path, fill: "none", stroke: POSITIVE, "stroke-width": 2, class: "term-step-path",
  }));
  svg.appendChild(svgElement("line", {
    x1: 30, y1: zeroY, x2: width - 10, y2: zeroY, stroke: "#555", "stroke-width": 1,
  }));
  return svg;
}
