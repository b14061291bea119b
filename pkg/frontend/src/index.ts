export { Robot, VERSION } from "./robot.js";
export type { ChainFormat, IkSolution, RobotOptions } from "./robot.js";
