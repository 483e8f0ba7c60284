// Control panel: every outbound command is tied to an explicit gesture
// (button press, slider release, form submit). Renders link status,
// vessel badges, and the ACK-correlated command log.
import { MODE_NAMES } from "./protocol.js";
const HEALTH_BADGES = [
    [0x01, "NO FIX"],
    [0x02, "LOW BATT"],
    [0x04, "LINK STALE"],
    [0x08, "SHALLOW"],
];
function el(id) {
    const found = document.getElementById(id);
    if (!found)
        throw new Error(`missing element #${id}`);
    return found;
}
export class ControlPanel {
    constructor(session) {
        this.session = session;
        this.banner = el("link-banner");
        this.badges = el("badges");
        this.readout = el("readout");
        this.commandList = el("command-log");
        this.modeSelect = el("mode-select");
        this.thrustLeft = el("thrust-left");
        this.thrustRight = el("thrust-right");
        this.thrustLabel = el("thrust-label");
        this.speedInput = el("speed-input");
        this.headingInput = el("heading-input");
        MODE_NAMES.forEach((name, value) => {
            const option = document.createElement("option");
            option.value = String(value);
            option.textContent = `${value} · ${name}`;
            this.modeSelect.appendChild(option);
        });
        el("arm-btn").addEventListener("click", () => session.send({ type: "ARM", flag: 1 }, "ARM"));
        el("disarm-btn").addEventListener("click", () => session.send({ type: "ARM", flag: 0 }, "DISARM"));
        el("mode-btn").addEventListener("click", () => {
            const mode = Number(this.modeSelect.value);
            session.send({ type: "SET_MODE", mode }, `SET_MODE ${MODE_NAMES[mode] ?? mode}`);
        });
        const sendThrust = () => {
            const left = Number(this.thrustLeft.value);
            const right = Number(this.thrustRight.value);
            this.thrustLabel.textContent = `${left} / ${right}`;
            this.session.send({ type: "SET_THRUST", left_permille: left, right_permille: right }, `SET_THRUST ${left}/${right}`);
        };
        this.thrustLeft.addEventListener("change", sendThrust);
        this.thrustRight.addEventListener("change", sendThrust);
        el("thrust-zero").addEventListener("click", () => {
            this.thrustLeft.value = "0";
            this.thrustRight.value = "0";
            sendThrust();
        });
        el("velhead-btn").addEventListener("click", () => {
            const speed = Math.round(Number(this.speedInput.value) * 1000);
            const heading = Math.round(Number(this.headingInput.value) * 100) % 36000;
            session.send({ type: "SET_VEL_HEAD", speed_mms: speed, heading_cdeg: heading }, `SET_VEL_HEAD ${this.speedInput.value} m/s @ ${this.headingInput.value}°`);
        });
    }
    lastVelHeadSetpoint() {
        return {
            speedMs: Number(this.speedInput.value),
            headingDeg: Number(this.headingInput.value),
        };
    }
    showStatus(status, detail) {
        this.banner.textContent = detail;
        this.banner.className = `banner banner-${status}`;
    }
    renderHeartbeat(hb, ageSeconds, stale) {
        this.badges.replaceChildren();
        const add = (text, cls) => {
            const span = document.createElement("span");
            span.className = `badge ${cls}`;
            span.textContent = text;
            this.badges.appendChild(span);
        };
        if (!hb) {
            add("NO TELEMETRY", "badge-warn");
            return;
        }
        add(MODE_NAMES[hb.mode] ?? `mode ${hb.mode}`, "badge-mode");
        add(hb.armed ? "ARMED" : "DISARMED", hb.armed ? "badge-armed" : "badge-idle");
        const age = isFinite(ageSeconds) ? `${ageSeconds.toFixed(1)} s` : "never";
        add(`HB ${age}`, stale ? "badge-warn" : "badge-ok");
        for (const [bit, label] of HEALTH_BADGES) {
            if (hb.health & bit)
                add(label, "badge-warn");
        }
        const manual = hb.mode === 0;
        this.thrustLeft.disabled = !manual;
        this.thrustRight.disabled = !manual;
    }
    // The numeric heading readout is the raw telemetry value, unsmoothed.
    renderState(state) {
        if (!state) {
            this.readout.textContent = "awaiting STATE…";
            return;
        }
        const psi = (state.psi_cdeg / 100).toFixed(2);
        const parts = [
            `E ${(state.x_mm / 1000).toFixed(2)} m`,
            `N ${(state.y_mm / 1000).toFixed(2)} m`,
            `ψ ${psi}°`,
            `u ${(state.u_mms / 1000).toFixed(2)} m/s`,
            `thr ${state.thr_l_permille}/${state.thr_r_permille}`,
        ];
        this.readout.textContent = parts.join("   ");
    }
    renderCommands(commands) {
        this.commandList.replaceChildren();
        for (const entry of commands.slice(-8).reverse()) {
            const li = document.createElement("li");
            li.className = `cmd cmd-${entry.state}`;
            li.textContent = `${entry.label} — ${entry.state}`;
            this.commandList.appendChild(li);
        }
    }
}
