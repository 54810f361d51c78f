/**
 * The command grammar, mirrored panel-side.
 *
 * The panel speaks the exact text an SMS keypad would send:
 *
 *     <appliance> <op> [<duration_s>]
 *
 * op "1" = on, "0" = off; the optional third field (seconds, 1..86400)
 * arms a timed run.  The composer builds bodies with renderCommand and
 * the history view re-parses whatever the server logged, so one command
 * language covers phone-sent and panel-sent messages alike.
 */
export const MAX_DURATION_S = 86400;
const NAME_RE = /^[a-z][a-z0-9_]{0,31}$/;
const DIGITS_RE = /^[0-9]+$/;
export class CommandParseError extends Error {
    kind;
    constructor(kind, detail) {
        super(detail);
        this.kind = kind;
        this.name = "CommandParseError";
    }
}
function stripWs(text) {
    return text.replace(/^[ \t]+/, "").replace(/[ \t]+$/, "");
}
export function parseCommand(body) {
    const text = stripWs(body);
    if (!text) {
        throw new CommandParseError("EmptyBody", "message body is empty");
    }
    const fields = text.split(/[ \t]+/);
    if (fields.length !== 2 && fields.length !== 3) {
        throw new CommandParseError("WrongFieldCount", `expected 2 or 3 fields, got ${fields.length}`);
    }
    const name = fields[0].toLowerCase();
    if (!NAME_RE.test(name)) {
        throw new CommandParseError("BadName", `bad appliance name "${fields[0]}"`);
    }
    const opcode = fields[1];
    if (opcode !== "0" && opcode !== "1") {
        throw new CommandParseError("BadOpCode", `op must be 0 or 1, got "${opcode}"`);
    }
    if (fields.length === 2) {
        return { appliance: name, op: opcode === "1" ? { kind: "on" } : { kind: "off" } };
    }
    if (opcode === "0") {
        throw new CommandParseError("DurationWithOff", "off takes no duration field");
    }
    const raw = fields[2];
    if (!DIGITS_RE.test(raw)) {
        throw new CommandParseError("BadDuration", `duration must be decimal digits, got "${raw}"`);
    }
    const duration = parseInt(raw, 10);
    if (duration < 1 || duration > MAX_DURATION_S) {
        throw new CommandParseError("BadDuration", `duration must be 1..${MAX_DURATION_S} seconds, got ${duration}`);
    }
    return { appliance: name, op: { kind: "on_timed", durationS: duration } };
}
export function renderCommand(cmd) {
    switch (cmd.op.kind) {
        case "on":
            return `${cmd.appliance} 1`;
        case "off":
            return `${cmd.appliance} 0`;
        case "on_timed":
            return `${cmd.appliance} 1 ${cmd.op.durationS}`;
    }
}
