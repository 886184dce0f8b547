// Rolling plot of the server-reported per-frame error (log scale).

export interface PlotScale {
  floor: number;   // values at or below render at the bottom
  ceil: number;
}

export function autoScale(values: number[]): PlotScale {
  let ceil = 1e-6;
  for (const v of values) {
    if (Number.isFinite(v) && v > ceil) ceil = v;
  }
  return { floor: 1e-9, ceil };
}

export function toPlotY(value: number, scale: PlotScale, heightPx: number): number {
  const v = Math.max(value, scale.floor);
  const t = Math.log(v / scale.floor) / Math.log(scale.ceil / scale.floor);
  return heightPx - Math.max(0, Math.min(1, t)) * heightPx;
}

export function renderErrorPlot(ctx: CanvasRenderingContext2D, width: number,
                                height: number, values: number[]): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#16161d";
  ctx.fillRect(0, 0, width, height);
  if (values.length < 2) return;
  const scale = autoScale(values);
  ctx.strokeStyle = "#ffaa22";
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  const step = width / (values.length - 1);
  values.forEach((v, i) => {
    const y = toPlotY(v, scale, height);
    if (i === 0) ctx.moveTo(0, y);
    else ctx.lineTo(i * step, y);
  });
  ctx.stroke();
  const last = values[values.length - 1];
  ctx.fillStyle = "#ddd";
  ctx.font = "11px monospace";
  ctx.fillText(`err ${last.toExponential(2)}`, 6, 14);
}
