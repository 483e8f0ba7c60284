// Scrolling strip charts: measured value against its setpoint.
export class StripChart {
    constructor(canvas, series, options) {
        this.canvas = canvas;
        this.series = series;
        this.options = options;
    }
    range(samples) {
        if (this.options.min !== undefined && this.options.max !== undefined) {
            return [this.options.min, this.options.max];
        }
        let lo = Infinity;
        let hi = -Infinity;
        for (const s of samples) {
            lo = Math.min(lo, s.value, s.setpoint ?? s.value);
            hi = Math.max(hi, s.value, s.setpoint ?? s.value);
        }
        if (!isFinite(lo))
            return [0, 1];
        const pad = Math.max(0.1, (hi - lo) * 0.15);
        return [lo - pad, hi + pad];
    }
    draw() {
        const ctx = this.canvas.getContext("2d");
        if (!ctx)
            return;
        const w = this.canvas.width;
        const h = this.canvas.height;
        ctx.fillStyle = "#0b1620";
        ctx.fillRect(0, 0, w, h);
        const samples = this.series.window();
        ctx.fillStyle = "#8fa8bd";
        ctx.font = "11px sans-serif";
        const latest = samples.length ? samples[samples.length - 1] : null;
        const readout = latest ? latest.value.toFixed(2) : "--";
        ctx.fillText(`${this.options.label}: ${readout} ${this.options.unit}`, 6, 13);
        if (samples.length < 2)
            return;
        const tEnd = samples[samples.length - 1].t;
        const tStart = tEnd - this.series.windowSeconds;
        const [lo, hi] = this.range(samples);
        const xOf = (t) => ((t - tStart) / (tEnd - tStart || 1)) * w;
        const yOf = (v) => h - ((v - lo) / (hi - lo || 1)) * (h - 18) - 2;
        const traces = [
            { pick: (s) => s.setpoint, style: "#f4d35e", dash: [5, 4] },
            { pick: (s) => s.value, style: "#3f88c5", dash: [] },
        ];
        for (const trace of traces) {
            ctx.strokeStyle = trace.style;
            ctx.setLineDash(trace.dash);
            ctx.lineWidth = 1.5;
            ctx.beginPath();
            let pen = false;
            let prev = null;
            for (const s of samples) {
                const value = trace.pick(s);
                if (value === null) {
                    pen = false;
                    prev = null;
                    continue;
                }
                const broke = this.options.wrap && prev !== null && Math.abs(value - prev) > 180;
                if (!pen || broke) {
                    ctx.moveTo(xOf(s.t), yOf(value));
                    pen = true;
                }
                else {
                    ctx.lineTo(xOf(s.t), yOf(value));
                }
                prev = value;
            }
            ctx.stroke();
        }
        ctx.setLineDash([]);
    }
}
