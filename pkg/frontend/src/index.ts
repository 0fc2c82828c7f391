export {
  NeurosymClient,
  TransportError,
  ProtocolError,
  TimeoutError,
} from "./client.js";
export type {
  AnswerType,
  ClientConfig,
  ScoreResult,
  Transport,
} from "./client.js";
