// Canvas map: East-North meters grid, breadcrumb track, vessel icon,
// obstacle fan, waypoint and loiter markers. Pan with drag, zoom with
// the wheel, click to place a waypoint (the click callback decides).
import { TrackBuffer } from "./buffers.js";
import { headingToCanvasRotation, screenToWorld, sectorArc, worldToScreen, } from "./geometry.js";
import { NO_READING, SECTOR_COUNT } from "./protocol.js";
const CLICK_SLOP_PX = 5;
export class MapCanvas {
    constructor(canvas) {
        this.canvas = canvas;
        this.track = new TrackBuffer(5000);
        this.vessel = null;
        this.waypoint = null;
        this.sectors = null; // centimeters, NO_READING = absent
        this.onClick = null;
        this.dragging = false;
        this.moved = false;
        this.lastPointer = [0, 0];
        this.view = {
            centerX: 0,
            centerY: 0,
            scale: 12,
            width: canvas.width,
            height: canvas.height,
        };
        canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
        canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
        canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
        canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
    }
    get viewport() {
        return { ...this.view };
    }
    canvasPoint(e) {
        const rect = this.canvas.getBoundingClientRect();
        return [
            ((e.clientX - rect.left) / rect.width) * this.canvas.width,
            ((e.clientY - rect.top) / rect.height) * this.canvas.height,
        ];
    }
    pointerDown(e) {
        this.dragging = true;
        this.moved = false;
        this.lastPointer = this.canvasPoint(e);
        this.canvas.setPointerCapture(e.pointerId);
    }
    pointerMove(e) {
        if (!this.dragging)
            return;
        const [px, py] = this.canvasPoint(e);
        const dx = px - this.lastPointer[0];
        const dy = py - this.lastPointer[1];
        if (Math.abs(dx) + Math.abs(dy) > CLICK_SLOP_PX)
            this.moved = true;
        if (this.moved) {
            this.view.centerX -= dx / this.view.scale;
            this.view.centerY += dy / this.view.scale;
            this.lastPointer = [px, py];
        }
    }
    pointerUp(e) {
        if (!this.dragging)
            return;
        this.dragging = false;
        if (!this.moved && this.onClick) {
            const [px, py] = this.canvasPoint(e);
            this.onClick(px, py);
        }
    }
    wheel(e) {
        e.preventDefault();
        const factor = e.deltaY < 0 ? 1.2 : 1 / 1.2;
        this.view.scale = Math.min(200, Math.max(1, this.view.scale * factor));
    }
    followVessel() {
        if (this.vessel) {
            this.view.centerX = this.vessel.x;
            this.view.centerY = this.vessel.y;
        }
    }
    draw() {
        this.view.width = this.canvas.width;
        this.view.height = this.canvas.height;
        const ctx = this.canvas.getContext("2d");
        if (!ctx)
            return;
        ctx.fillStyle = "#0b1620";
        ctx.fillRect(0, 0, this.view.width, this.view.height);
        this.drawGrid(ctx);
        this.drawSectors(ctx);
        this.drawTrack(ctx);
        this.drawWaypoint(ctx);
        this.drawVessel(ctx);
    }
    drawGrid(ctx) {
        const v = this.view;
        const step = v.scale > 30 ? 5 : v.scale > 6 ? 10 : 50; // meters
        const [minX, maxY] = screenToWorld(v, 0, 0);
        const [maxX, minY] = screenToWorld(v, v.width, v.height);
        ctx.strokeStyle = "#17293a";
        ctx.lineWidth = 1;
        ctx.fillStyle = "#3d5a75";
        ctx.font = "10px sans-serif";
        for (let gx = Math.floor(minX / step) * step; gx <= maxX; gx += step) {
            const [px] = worldToScreen(v, gx, 0);
            ctx.beginPath();
            ctx.moveTo(px, 0);
            ctx.lineTo(px, v.height);
            ctx.stroke();
            ctx.fillText(`${gx}`, px + 2, v.height - 4);
        }
        for (let gy = Math.floor(minY / step) * step; gy <= maxY; gy += step) {
            const [, py] = worldToScreen(v, 0, gy);
            ctx.beginPath();
            ctx.moveTo(0, py);
            ctx.lineTo(v.width, py);
            ctx.stroke();
            ctx.fillText(`${gy}`, 4, py - 2);
        }
    }
    drawTrack(ctx) {
        const points = this.track.toArray();
        if (points.length < 2)
            return;
        ctx.strokeStyle = "#3f88c5";
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        points.forEach((p, i) => {
            const [px, py] = worldToScreen(this.view, p.x, p.y);
            if (i === 0)
                ctx.moveTo(px, py);
            else
                ctx.lineTo(px, py);
        });
        ctx.stroke();
    }
    drawSectors(ctx) {
        if (!this.vessel || !this.sectors)
            return;
        const [cx, cy] = worldToScreen(this.view, this.vessel.x, this.vessel.y);
        for (let i = 0; i < SECTOR_COUNT; i++) {
            const cm = this.sectors[i];
            if (cm === NO_READING)
                continue; // absent sectors are not drawn
            const meters = cm / 100;
            const radius = meters * this.view.scale;
            const { start, end } = sectorArc(i, this.vessel.psiDeg);
            ctx.strokeStyle = meters <= 4 ? "#e4572e" : meters <= 10 ? "#e9b44c" : "#58a46a";
            ctx.lineWidth = 3;
            ctx.beginPath();
            ctx.arc(cx, cy, radius, start, end);
            ctx.stroke();
        }
    }
    drawWaypoint(ctx) {
        if (!this.waypoint)
            return;
        const [px, py] = worldToScreen(this.view, this.waypoint.x, this.waypoint.y);
        ctx.strokeStyle = "#f4d35e";
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        ctx.moveTo(px - 6, py);
        ctx.lineTo(px + 6, py);
        ctx.moveTo(px, py - 6);
        ctx.lineTo(px, py + 6);
        ctx.stroke();
        ctx.setLineDash([4, 4]);
        ctx.beginPath();
        ctx.arc(px, py, this.waypoint.radius * this.view.scale, 0, 2 * Math.PI);
        ctx.stroke();
        ctx.setLineDash([]);
    }
    drawVessel(ctx) {
        if (!this.vessel)
            return;
        const [px, py] = worldToScreen(this.view, this.vessel.x, this.vessel.y);
        ctx.save();
        ctx.translate(px, py);
        ctx.rotate(headingToCanvasRotation(this.vessel.psiDeg));
        ctx.fillStyle = this.vessel.armed ? "#7fe07f" : "#9aa7b3";
        ctx.strokeStyle = "#dfe8ef";
        ctx.lineWidth = 1;
        ctx.beginPath();
        ctx.moveTo(0, -10); // bow
        ctx.lineTo(6, 8);
        ctx.lineTo(-6, 8);
        ctx.closePath();
        ctx.fill();
        ctx.stroke();
        ctx.restore();
        // loiter ring around the hold point when loitering
        if (this.vessel.mode === 3) {
            ctx.strokeStyle = "#b497d6";
            ctx.setLineDash([6, 4]);
            ctx.beginPath();
            ctx.arc(px, py, 2 * this.view.scale, 0, 2 * Math.PI);
            ctx.stroke();
            ctx.setLineDash([]);
        }
    }
}
