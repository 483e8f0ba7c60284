// Pure world<->screen math for the flat East-North meters map.
// Screen x grows right (east), screen y grows down, so north is up.
export function worldToScreen(v, x, y) {
    return [v.width / 2 + (x - v.centerX) * v.scale, v.height / 2 - (y - v.centerY) * v.scale];
}
export function screenToWorld(v, px, py) {
    return [v.centerX + (px - v.width / 2) / v.scale, v.centerY - (py - v.height / 2) / v.scale];
}
// A map click becomes a waypoint command; radius 0 defers to the
// vessel's configured default acceptance radius.
export function waypointFromClick(v, px, py, acceptRadiusCm = 0) {
    const [x, y] = screenToWorld(v, px, py);
    return {
        type: "SET_WAYPOINT",
        x_mm: Math.round(x * 1000),
        y_mm: Math.round(y * 1000),
        accept_radius_cm: acceptRadiusCm,
    };
}
// Compass heading (degrees clockwise from North) to canvas rotation
// radians for an icon drawn pointing up: psi=0 stays up, psi=90 points
// right (east) — which on screen is a clockwise rotation by psi.
export function headingToCanvasRotation(psiDeg) {
    return (psiDeg * Math.PI) / 180;
}
// Canvas arc angles (radians, measured from +x axis, y-down screen) for
// one obstacle sector. Sector 0 is centered on the bow; indices grow
// clockwise; each sector spans 5 degrees.
export function sectorArc(index, psiDeg) {
    const centerCompass = psiDeg + index * 5; // degrees CW from north
    const halfSpan = 2.5;
    // compass deg -> canvas angle: theta = compass - 90 (canvas y is down,
    // so clockwise compass rotation IS positive canvas rotation)
    const start = ((centerCompass - halfSpan - 90) * Math.PI) / 180;
    const end = ((centerCompass + halfSpan - 90) * Math.PI) / 180;
    return { start, end };
}
export function wrapDeg(delta) {
    return ((((delta + 180) % 360) + 360) % 360) - 180;
}
