// Bounded buffers behind the track display and the strip charts.
// Ring buffer of recent vessel positions (the breadcrumb trail).
export class TrackBuffer {
    constructor(capacity = 5000) {
        this.capacity = capacity;
        this.points = [];
        this.head = 0;
    }
    push(x, y) {
        if (this.points.length < this.capacity) {
            this.points.push({ x, y });
        }
        else {
            this.points[this.head] = { x, y };
            this.head = (this.head + 1) % this.capacity;
        }
    }
    get length() {
        return this.points.length;
    }
    // Oldest to newest.
    toArray() {
        return this.points.slice(this.head).concat(this.points.slice(0, this.head));
    }
    clear() {
        this.points = [];
        this.head = 0;
    }
}
// Time series for one strip chart: measured value plus its setpoint.
export class SeriesBuffer {
    constructor(windowSeconds = 60, maxSamples = 5000) {
        this.windowSeconds = windowSeconds;
        this.maxSamples = maxSamples;
        this.samples = [];
    }
    push(t, value, setpoint) {
        this.samples.push({ t, value, setpoint });
        const cutoff = t - this.windowSeconds;
        let drop = 0;
        while (drop < this.samples.length - 1 &&
            (this.samples[drop].t < cutoff || this.samples.length - drop > this.maxSamples)) {
            drop++;
        }
        if (drop > 0)
            this.samples = this.samples.slice(drop);
    }
    // Samples inside the scrolling window ending at the newest point.
    window() {
        return this.samples;
    }
    get latest() {
        return this.samples.length ? this.samples[this.samples.length - 1] : null;
    }
    clear() {
        this.samples = [];
    }
}
