// Ground-station bootstrap: one link session, map, charts, controls,
// and a render loop.

import { SeriesBuffer } from "./buffers.js";
import { StripChart } from "./charts.js";
import { ControlPanel } from "./controls.js";
import { waypointFromClick } from "./geometry.js";
import { LinkSession } from "./link.js";
import { MapCanvas } from "./map.js";
import type { Message, State } from "./protocol.js";

function linkUrl(): string {
  const override = new URLSearchParams(location.search).get("ws");
  if (override) return override;
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/link`;
}

const map = new MapCanvas(document.getElementById("map") as HTMLCanvasElement);
const speedSeries = new SeriesBuffer(60);
const headingSeries = new SeriesBuffer(60);
const speedChart = new StripChart(
  document.getElementById("chart-speed") as HTMLCanvasElement,
  speedSeries,
  { label: "speed", unit: "m/s" },
);
const headingChart = new StripChart(
  document.getElementById("chart-heading") as HTMLCanvasElement,
  headingSeries,
  { label: "heading", unit: "°", min: 0, max: 360, wrap: true },
);

let lastState: State | null = null;

const session = new LinkSession(linkUrl(), {
  onStatus: (status, detail) => panel.showStatus(status, detail),
  onMessage: (msg: Message) => {
    if (msg.type === "STATE") {
      lastState = msg;
      const x = msg.x_mm / 1000;
      const y = msg.y_mm / 1000;
      map.track.push(x, y);
      const hb = session.lastHeartbeat;
      map.vessel = {
        x,
        y,
        psiDeg: msg.psi_cdeg / 100,
        mode: hb?.mode ?? 4,
        armed: (hb?.armed ?? 0) === 1,
      };
      const t = msg.t_ms / 1000;
      const guided = hb?.mode === 1;
      const sp = panel.lastVelHeadSetpoint();
      speedSeries.push(t, msg.u_mms / 1000, guided ? sp.speedMs : null);
      headingSeries.push(t, msg.psi_cdeg / 100, guided ? sp.headingDeg : null);
    } else if (msg.type === "OBSTACLE") {
      map.sectors = msg.distances_cm;
    }
  },
  onCommand: () => panel.renderCommands(session.commands),
});

const panel = new ControlPanel(session);

map.onClick = (px, py) => {
  const wp = waypointFromClick(map.viewport, px, py);
  const x = wp.x_mm / 1000;
  const y = wp.y_mm / 1000;
  map.waypoint = { x, y, radius: 2 };
  session.send(wp, `SET_WAYPOINT (${x.toFixed(1)}, ${y.toFixed(1)})`);
};

(document.getElementById("center-btn") as HTMLButtonElement).addEventListener(
  "click",
  () => map.followVessel(),
);

session.connect();
setInterval(() => session.sendKeepalive(), 1000);

function frame(): void {
  panel.renderHeartbeat(
    session.lastHeartbeat
      ? { type: "HEARTBEAT", ...session.lastHeartbeat }
      : null,
    session.heartbeatAge(),
    session.isStale(),
  );
  panel.renderState(lastState);
  map.draw();
  speedChart.draw();
  headingChart.draw();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
