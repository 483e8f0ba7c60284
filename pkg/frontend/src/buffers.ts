// Bounded buffers behind the track display and the strip charts.

export interface TrackPoint {
  x: number;
  y: number;
}

// Ring buffer of recent vessel positions (the breadcrumb trail).
export class TrackBuffer {
  private points: TrackPoint[] = [];
  private head = 0;

  constructor(readonly capacity = 5000) {}

  push(x: number, y: number): void {
    if (this.points.length < this.capacity) {
      this.points.push({ x, y });
    } else {
      this.points[this.head] = { x, y };
      this.head = (this.head + 1) % this.capacity;
    }
  }

  get length(): number {
    return this.points.length;
  }

  // Oldest to newest.
  toArray(): TrackPoint[] {
    return this.points.slice(this.head).concat(this.points.slice(0, this.head));
  }

  clear(): void {
    this.points = [];
    this.head = 0;
  }
}

export interface Sample {
  t: number; // seconds
  value: number;
  setpoint: number | null;
}

// Time series for one strip chart: measured value plus its setpoint.
export class SeriesBuffer {
  private samples: Sample[] = [];

  constructor(readonly windowSeconds = 60, readonly maxSamples = 5000) {}

  push(t: number, value: number, setpoint: number | null): void {
    this.samples.push({ t, value, setpoint });
    const cutoff = t - this.windowSeconds;
    let drop = 0;
    while (
      drop < this.samples.length - 1 &&
      (this.samples[drop].t < cutoff || this.samples.length - drop > this.maxSamples)
    ) {
      drop++;
    }
    if (drop > 0) this.samples = this.samples.slice(drop);
  }

  // Samples inside the scrolling window ending at the newest point.
  window(): Sample[] {
    return this.samples;
  }

  get latest(): Sample | null {
    return this.samples.length ? this.samples[this.samples.length - 1] : null;
  }

  clear(): void {
    this.samples = [];
  }
}
